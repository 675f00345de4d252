//! Whitening and SVD decomposition of a Gaussian vector broadcast channel into parallel scalar
//! dirty-paper channels.

mod linalg;
mod model;
mod plan;
mod split;

pub use linalg::{
    frobenius, full_svd, hermitian_eigen, inv_sqrt, psd_sqrt, rect_diag, relative_residual,
    unitarity_residual, CMatrix, EIG_FLOOR,
};
pub use model::{ChannelModel, Receiver, POWER_TOL};
pub use plan::{
    capacity_targets, decompose, effective_noise_cov, mixing_coefficients, whiten_and_svd,
    CapacityTarget, ReceiverPlan, StreamCoeff, Subchannel, SubchannelPlan, Whitened, SIGMA_FLOOR,
};
pub use split::{real_split, stream_index, DpcParams, Part, RealChannel};
