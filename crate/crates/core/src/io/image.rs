use std::path::Path;

use image::RgbImage;

use super::ArtifactError;

/// Loads a PNG as 8-bit RGB. Other color types are converted.
pub fn read_png(path: &Path) -> Result<RgbImage, ArtifactError> {
    let img = image::open(path).map_err(|source| ArtifactError::Image {
        path: path.display().to_string(),
        source,
    })?;
    Ok(img.to_rgb8())
}

pub fn write_png(path: &Path, img: &RgbImage) -> Result<(), ArtifactError> {
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|source| ArtifactError::Image {
            path: path.display().to_string(),
            source,
        })
}
