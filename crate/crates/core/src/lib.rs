pub mod bench;
pub mod error;
pub mod lifting;
pub mod materials;
pub mod mpm;
pub mod observe;
pub mod sensitivity;
pub mod sysid;
pub mod tensor3;

pub use error::{Error, Result};
