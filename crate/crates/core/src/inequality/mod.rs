mod source;
mod suite;

pub use source::{
    check_removal_invariance, check_symmetry, PdfTable, ProbabilitySource, RemovalCheck,
    SymmetryCheckReport, TableRow, ANALYTIC_TOL, SAMPLED_SIGMAS,
};
pub use suite::{
    ch_30_forms, chsh_forms, combine, eval_ch_30, eval_chsh, eval_fc_31, eval_rt_32,
    eval_simplified_29, eval_strong_23, eval_weak_17, evaluate, fc_31_forms, forms_for,
    required_pairs, simplified_29_forms, strong_23_forms, weak_17_form, ChshAngles, Settings,
    FC_CHECK_ANGLES,
};
