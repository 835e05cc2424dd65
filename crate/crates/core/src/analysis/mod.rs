//! Analytical error-probability chain, data rate, energy saving and
//! detector complexity.

mod abep;
mod rates;

pub use abep::{
    abep_total, gray_pam_bit_terms, p1_freq_bits, p2_code_bits, p3_antenna_bits, p4_realign_bits,
    p5_from_qam, p_of, p_qam, pam_bit_closed, pam_bit_integrated, pe_branch_miss,
    pe_conditional_beta, pe_conditional_integrated, pe_conditional_printed, pew_code_correct,
    pew_conditional, pew_conditional_collapsed, pf1_single, pf_bound, AbepBreakdown,
    DistributionParams, PeReport, PewReport,
};
pub use rates::{
    complexity_counts, data_rate, energy_saving, measured_complexity, ComplexityCounts,
    RateEnergyReport, TableOneRow, TableTwoRow, TABLE1, TABLE2,
};
