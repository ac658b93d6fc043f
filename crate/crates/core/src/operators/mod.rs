//! Finite-dimensional operator layer: the PSD gap inequality, the perturbed
//! block inverse with its contraction bound, and finite sections of the
//! quadratic functional.

mod block;
mod section;

pub use block::{contraction_norm, lemma_psd_gap, perturbed_inverse, signature, BlockOperator};
pub use section::{
    build_section, check_necessary_condition, solve_section_saddle, OperatorSection, SectionSaddle, SignReport,
    Witness, SECTION_MAX_CONDITION, SECTION_NOTE_FAIL, SECTION_NOTE_PASS,
};
