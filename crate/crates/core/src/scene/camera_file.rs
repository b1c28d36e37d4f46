//! JSON camera list.
//!
//! ```json
//! { "cameras": [ { "width": 256, "height": 256,
//!                  "fx": 256.0, "fy": 256.0, "cx": 128.0, "cy": 128.0,
//!                  "znear": 0.01,
//!                  "view": [[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]] } ] }
//! ```
//!
//! `view` is the row-major world-to-camera transform. Cameras are returned in
//! file order.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Camera;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CameraRecord {
    pub cameras: Vec<Camera>,
}

pub fn load_cameras(path: impl AsRef<Path>) -> Result<Vec<Camera>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_cameras(&text)
}

pub(crate) fn parse_cameras(text: &str) -> Result<Vec<Camera>> {
    let record: CameraRecord =
        serde_json::from_str(text).map_err(|e| Error::Format(format!("camera file: {e}")))?;
    for (i, cam) in record.cameras.iter().enumerate() {
        cam.validate()
            .map_err(|e| Error::Validation(format!("camera {i}: {e}")))?;
    }
    Ok(record.cameras)
}

pub fn save_cameras(cameras: &[Camera], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let record = CameraRecord {
        cameras: cameras.to_vec(),
    };
    let text = serde_json::to_string_pretty(&record).expect("camera serialization");
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
