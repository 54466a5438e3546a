use super::Plane;
use crate::error::{Error, Result};

/// A multi-channel image with intensities in `[0, 1]`, stored channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageStack {
    channels: Vec<Plane>,
}

impl ImageStack {
    pub fn new(channels: Vec<Plane>) -> Result<Self> {
        let first = channels
            .first()
            .ok_or_else(|| Error::invalid("image needs at least one channel"))?;
        let dims = first.dims();
        for (c, plane) in channels.iter().enumerate() {
            if plane.dims() != dims {
                return Err(Error::invalid(format!(
                    "channel {c} is {:?}, expected {:?}",
                    plane.dims(),
                    dims
                )));
            }
            if let Some(v) = plane
                .as_slice()
                .iter()
                .find(|v| !v.is_finite() || **v < 0.0 || **v > 1.0)
            {
                return Err(Error::invalid(format!(
                    "channel {c} holds {v}, intensities must lie in [0, 1]"
                )));
            }
        }
        Ok(ImageStack { channels })
    }

    pub fn from_plane(plane: Plane) -> Result<Self> {
        Self::new(vec![plane])
    }

    pub fn width(&self) -> usize {
        self.channels[0].width()
    }

    pub fn height(&self) -> usize {
        self.channels[0].height()
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn channel(&self, c: usize) -> &Plane {
        &self.channels[c]
    }

    pub fn channels(&self) -> &[Plane] {
        &self.channels
    }

    pub fn into_channels(self) -> Vec<Plane> {
        self.channels
    }
}
