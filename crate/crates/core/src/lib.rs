//! Fixed-weight early-vision front-ends.
//!
//! * [`retina`]: light adaptation, colour-opponent difference-of-Gaussians
//!   and contrast normalisation, producing four channels (three midget, one
//!   parasol).
//! * [`vone`]: a noise-free Gabor filter bank with simple- and complex-cell
//!   nonlinearities, and its composition with the retina block.
//! * [`lab`]: drifting-grating probes, Fourier metrics, tuning curves and
//!   contrast-response fits.

pub mod conv;
pub mod error;
pub mod geometry;
pub mod kernel;
pub mod lab;
pub mod retina;
pub mod tensor;
pub mod vone;

pub use conv::{conv2d, conv2d_at};
pub use error::{Error, Result};
pub use geometry::{make_field, FieldGeometry};
pub use kernel::{dog_kernel, gabor_pair, gaussian_kernel, DogParams, GaborParams, Kernel, KernelKind};
pub use tensor::{ImageTensor, Plane};
