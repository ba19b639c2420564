//! Dense channel-major image containers.

use crate::error::{Error, Result};

/// A single-channel image stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl Plane {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::Shape(format!(
                "plane of {height}x{width} needs {} values, got {}",
                height * width,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Shape(format!("non-finite value at index {i}")));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self::filled(height, width, 0.0)
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Self {
        Self {
            height,
            width,
            data: vec![value; height * width],
        }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for y in 0..height {
            for x in 0..width {
                data.push(f(y, x));
            }
        }
        Self {
            height,
            width,
            data,
        }
    }

    // Crate-internal constructor for buffers produced by our own kernels.
    pub(crate) fn from_raw(height: usize, width: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), height * width);
        Self {
            height,
            width,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn row(&self, y: usize) -> &[f64] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Plane {
        Plane::from_raw(self.height, self.width, self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Plane, f: impl Fn(f64, f64) -> f64) -> Plane {
        debug_assert_eq!(self.dims(), other.dims());
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Plane::from_raw(self.height, self.width, data)
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// A multi-channel image; channel `c` occupies `data[c*h*w..(c+1)*h*w]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl ImageTensor {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != channels * height * width {
            return Err(Error::Shape(format!(
                "tensor of {channels}x{height}x{width} needs {} values, got {}",
                channels * height * width,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Shape(format!("non-finite value at index {i}")));
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self::filled(channels, height, width, 0.0)
    }

    pub fn filled(channels: usize, height: usize, width: usize, value: f64) -> Self {
        Self {
            channels,
            height,
            width,
            data: vec![value; channels * height * width],
        }
    }

    /// Stacks equally sized planes into a tensor.
    pub fn from_planes(planes: Vec<Plane>) -> Result<Self> {
        let first = planes.first().ok_or(Error::Empty("no planes to stack"))?;
        let (height, width) = first.dims();
        if let Some(p) = planes.iter().find(|p| p.dims() != (height, width)) {
            return Err(Error::Shape(format!(
                "cannot stack a {}x{} plane with {height}x{width} planes",
                p.height, p.width
            )));
        }
        let channels = planes.len();
        let mut data = Vec::with_capacity(channels * height * width);
        for p in planes {
            data.extend(p.data);
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn channel_slice(&self, c: usize) -> &[f64] {
        let n = self.height * self.width;
        &self.data[c * n..(c + 1) * n]
    }

    pub fn plane(&self, c: usize) -> Result<Plane> {
        if c >= self.channels {
            return Err(Error::Shape(format!(
                "channel {c} out of range for a {}-channel tensor",
                self.channels
            )));
        }
        Ok(Plane::from_raw(
            self.height,
            self.width,
            self.channel_slice(c).to_vec(),
        ))
    }

    pub fn planes(&self) -> Vec<Plane> {
        (0..self.channels)
            .map(|c| Plane::from_raw(self.height, self.width, self.channel_slice(c).to_vec()))
            .collect()
    }

    pub fn get(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[(c * self.height + y) * self.width + x]
    }

    /// Per-pixel average over channels. Exact where all channels agree.
    pub fn channel_mean(&self) -> Plane {
        let n = self.height * self.width;
        let k = self.channels as f64;
        let out = (0..n)
            .map(|i| {
                let first = self.data[i];
                let mut sum = 0.0;
                let mut equal = true;
                for c in 0..self.channels {
                    let v = self.data[c * n + i];
                    sum += v;
                    equal &= v == first;
                }
                if equal {
                    first
                } else {
                    sum / k
                }
            })
            .collect();
        Plane::from_raw(self.height, self.width, out)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ImageTensor {
        Self {
            channels: self.channels,
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Returns a tensor whose channels are `order[i]`-th channels of `self`.
    pub fn select_channels(&self, order: &[usize]) -> Result<ImageTensor> {
        let planes = order
            .iter()
            .map(|&c| self.plane(c))
            .collect::<Result<Vec<_>>>()?;
        ImageTensor::from_planes(planes)
    }
}
