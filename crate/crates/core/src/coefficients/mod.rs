//! Reaction term `F` and noise operator `G`, with lattice validation of the
//! structural hypotheses they must satisfy.

pub mod drift;
pub mod noise;
pub mod osgood;
pub mod validate;

pub use drift::{argmax_abs, DissipativityReport, PolynomialDrift};
pub use noise::{Modulus, NoiseFamily, NoiseMode, Profile, ProfileKind, Response, DEFAULT_MODES};
pub use osgood::{validate_osgood, OsgoodClass, OsgoodReport, DEFAULT_OSGOOD_RMIN, DEFAULT_OSGOOD_TOL};
pub use validate::{validate_drift, validate_noise_family, CheckOutcome, NoiseCertificate, NoiseLattice};
