//! Axially symmetric solutions of the reduced membrane equation: profile
//! integration, geometric fields, finite-difference operators, Dirichlet
//! spectra and stability tests.

pub mod banded;
pub mod dd;
pub mod error;
pub mod fields;
pub mod io;
pub mod operators;
pub mod ode;
pub mod profile;
pub mod spectrum;
pub mod stability;

pub use banded::{solve_tridiagonal, BandMatrix};
pub use dd::{Dd, Scalar};
pub use error::{MembraneError, Result};
pub use profile::{
    apex_expansion, integrate_profile, locate_event, resample, ApexInit, ApexState, ModelParams,
    ProfileCurve, StopKind, StopRule,
};
pub use operators::{
    assemble, assemble_f, convergence_study, identity_suite, ApexBc, DiscreteOperator,
    IdentityId, IdentityReport, OperatorKind, OuterBc,
};
pub use spectrum::{
    fp_consistency, rayleigh_quotient, solve_dirichlet_spectrum, EigenPair, WeightKind,
};
pub use fields::{
    angular_factor, boundary_darboux, energies, geometric_fields, surface_integral, BoundaryData,
    Energies, FieldTable, QuadRule,
};
pub use stability::{
    bound_chain, closed_form_h, corollary_checks, el_residuals_and_alpha_beta, p_operator,
    second_variation_e, second_variation_g, second_variation_h, shoot_psi, solve_h,
    thmbif_verdict, StabilityReport, Verdict,
};
