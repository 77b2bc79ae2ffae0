//! Projective space over a discrete valuation ring `V = Q[pi]_(pi)`.

pub mod blowup;
pub mod etale;
pub mod gamma;
pub mod grassmann;
pub mod proj;
pub mod scalar;
pub mod upoly;

pub use blowup::{blowup_chart_verify, BlowupReport};
pub use etale::{
    etale_check_curve_intersection, good_locus, run_instance, sample_hyperplane_through_p, CurveInstance,
    DvrInstanceConfig, DvrInstanceReport, EtaleVerdict, Family,
};
pub use gamma::{gamma_ideal_basis, verify_gamma_sequences, GammaIdealBasis, GammaReport};
pub use grassmann::{grassmann_specialize, random_subspace, saturate_in_v, GrassmannReport};
pub use proj::{specialize_affine, specialize_point, Form, ProjPointV};
pub use scalar::{DvrScalar, KElem, KField};
