//! Strided 2-D cross-correlation with reflective padding.
//!
//! Padding is `floor(k/2)` on each side and mirrors about the edge pixel
//! without repeating it (`[c b | a b c d | c b]`). Output pixel `(i, j)` is
//! centred on input pixel `(i*stride, j*stride)`, giving `ceil(n/stride)`
//! outputs per axis.

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::tensor::Plane;

#[inline]
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let r = if i < 0 {
        -i
    } else if i >= n {
        2 * (n - 1) - i
    } else {
        i
    };
    r as usize
}

fn check(input: &Plane, kernel: &Kernel, stride: usize) -> Result<()> {
    if stride == 0 {
        return Err(Error::Config("stride must be at least 1".into()));
    }
    let (h, w) = input.dims();
    if h == 0 || w == 0 {
        return Err(Error::Empty("convolution input has no pixels"));
    }
    let pad = kernel.height() / 2;
    let limit = h.min(w);
    if pad >= limit && pad > 0 {
        return Err(Error::Size {
            kernel: kernel.height(),
            input: limit,
        });
    }
    Ok(())
}

pub fn output_dim(n: usize, stride: usize) -> usize {
    n.div_ceil(stride)
}

/// Cross-correlates `input` with `kernel` (no kernel flip).
pub fn conv2d(input: &Plane, kernel: &Kernel, stride: usize) -> Result<Plane> {
    check(input, kernel, stride)?;
    if kernel.factors().is_empty() {
        Ok(dense(input, kernel, stride))
    } else {
        Ok(factored(input, kernel, stride))
    }
}

/// Cross-correlation evaluated at a single output position.
pub fn conv2d_at(input: &Plane, kernel: &Kernel, stride: usize, oy: usize, ox: usize) -> Result<f64> {
    check(input, kernel, stride)?;
    let (h, w) = input.dims();
    if oy >= output_dim(h, stride) || ox >= output_dim(w, stride) {
        return Err(Error::Shape(format!("output position ({oy}, {ox}) out of range")));
    }
    let k = kernel.height();
    let half = (k / 2) as isize;
    let (cy, cx) = ((oy * stride) as isize, (ox * stride) as isize);
    let data = input.data();
    let mut acc = 0.0;
    for i in 0..k {
        let y = reflect(cy + i as isize - half, h);
        let row = &data[y * w..(y + 1) * w];
        let krow = &kernel.weights()[i * k..(i + 1) * k];
        for (j, kv) in krow.iter().enumerate() {
            acc += kv * row[reflect(cx + j as isize - half, w)];
        }
    }
    Ok(acc)
}

fn padded(input: &Plane, pad: usize) -> (Vec<f64>, usize) {
    let (h, w) = input.dims();
    let pw = w + 2 * pad;
    let mut out = Vec::with_capacity((h + 2 * pad) * pw);
    for py in 0..h + 2 * pad {
        let row = input.row(reflect(py as isize - pad as isize, h));
        for px in 0..pw {
            out.push(row[reflect(px as isize - pad as isize, w)]);
        }
    }
    (out, pw)
}

fn dense(input: &Plane, kernel: &Kernel, stride: usize) -> Plane {
    let (h, w) = input.dims();
    let k = kernel.height();
    let (pad_buf, pw) = padded(input, k / 2);
    let (oh, ow) = (output_dim(h, stride), output_dim(w, stride));
    let weights = kernel.weights();
    let mut out = vec![0.0; oh * ow];
    for oy in 0..oh {
        for ox in 0..ow {
            let (y0, x0) = (oy * stride, ox * stride);
            let mut acc = 0.0;
            for i in 0..k {
                let src = &pad_buf[(y0 + i) * pw + x0..(y0 + i) * pw + x0 + k];
                let krow = &weights[i * k..(i + 1) * k];
                acc += krow.iter().zip(src).map(|(a, b)| a * b).sum::<f64>();
            }
            out[oy * ow + ox] = acc;
        }
    }
    Plane::from_raw(oh, ow, out)
}

fn factored(input: &Plane, kernel: &Kernel, stride: usize) -> Plane {
    let (h, w) = input.dims();
    let k = kernel.height();
    let pad = k / 2;
    let (oh, ow) = (output_dim(h, stride), output_dim(w, stride));
    let mut out = vec![0.0; oh * ow];

    // Row-padded copy of the input, reused by every factor.
    let pw = w + 2 * pad;
    let mut rows = Vec::with_capacity(h * pw);
    for y in 0..h {
        let row = input.row(y);
        for px in 0..pw {
            rows.push(row[reflect(px as isize - pad as isize, w)]);
        }
    }

    let mut tmp = vec![0.0; h * ow];
    for (coef, taps) in kernel.factors() {
        // horizontal pass, strided columns, every row
        for y in 0..h {
            let src = &rows[y * pw..(y + 1) * pw];
            for ox in 0..ow {
                let x0 = ox * stride;
                tmp[y * ow + ox] = taps.iter().zip(&src[x0..x0 + k]).map(|(a, b)| a * b).sum();
            }
        }
        // vertical pass with reflected row lookup
        for oy in 0..oh {
            let y0 = (oy * stride) as isize - pad as isize;
            let dst = &mut out[oy * ow..(oy + 1) * ow];
            for (i, t) in taps.iter().enumerate() {
                let y = reflect(y0 + i as isize, h);
                let c = coef * t;
                for (d, s) in dst.iter_mut().zip(&tmp[y * ow..(y + 1) * ow]) {
                    *d += c * s;
                }
            }
        }
    }
    Plane::from_raw(oh, ow, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::FieldGeometry;
    use crate::kernel::{dog_kernel, gabor_pair, gaussian_kernel, DogParams, GaborParams};

    fn geom() -> FieldGeometry {
        FieldGeometry::new(2.0, 64).unwrap()
    }

    fn ramp(h: usize, w: usize) -> Plane {
        Plane::from_fn(h, w, |y, x| ((y * 7 + x * 13) % 17) as f64 / 17.0 + 0.01 * y as f64)
    }

    #[test]
    fn constant_plane_is_preserved() {
        let k = gaussian_kernel(0.18, 21, &geom()).unwrap();
        let out = conv2d(&Plane::filled(64, 64, 0.37), &k, 1).unwrap();
        for v in out.data() {
            assert!((v - 0.37).abs() < 1e-12);
        }
    }

    #[test]
    fn output_shapes() {
        let g = geom();
        let k = dog_kernel(&DogParams::midget(), &g).unwrap();
        let x = Plane::zeros(64, 64);
        assert_eq!(conv2d(&x, &k, 1).unwrap().dims(), (64, 64));
        assert_eq!(conv2d(&x, &k, 2).unwrap().dims(), (32, 32));
        assert_eq!(conv2d(&Plane::zeros(63, 63), &k, 2).unwrap().dims(), (32, 32));
    }

    #[test]
    fn kernel_larger_than_input_is_rejected() {
        let k = gaussian_kernel(0.5, 85, &geom()).unwrap();
        let err = conv2d(&Plane::zeros(40, 40), &k, 1).unwrap_err();
        assert!(matches!(err, Error::Size { kernel: 85, input: 40 }));
        assert!(conv2d(&Plane::zeros(64, 64), &k, 0).is_err());
    }

    #[test]
    fn delta_response_reads_kernel_unflipped() {
        let (e, _) = gabor_pair(
            &GaborParams {
                theta: 0.4,
                sf_cpd: 3.0,
                phase: 0.9,
                nx: 0.3,
                ny: 0.5,
                kernel_px: 11,
            },
            &geom(),
        )
        .unwrap();
        let mut d = vec![0.0; 32 * 32];
        d[16 * 32 + 16] = 1.0;
        let out = conv2d(&Plane::new(32, 32, d).unwrap(), &e, 1).unwrap();
        // correlation: out(16 - dy, 16 - dx) = k(h + dy, h + dx)
        for i in 0..11 {
            for j in 0..11 {
                let got = out.get(16 + 5 - i, 16 + 5 - j);
                assert!((got - e.weight(i, j)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn factored_matches_dense_and_pointwise() {
        let g = geom();
        let x = ramp(64, 64);
        let k = dog_kernel(&DogParams::parasol(), &g).unwrap();
        for stride in [1, 2, 3] {
            let fast = conv2d(&x, &k, stride).unwrap();
            let slow = dense(&x, &k, stride);
            for (a, b) in fast.data().iter().zip(slow.data()) {
                assert!((a - b).abs() < 1e-12);
            }
            for (oy, ox) in [(0, 0), (5, 17), (fast.height() - 1, fast.width() - 1)] {
                let p = conv2d_at(&x, &k, stride, oy, ox).unwrap();
                assert!((p - fast.get(oy, ox)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn reflect_mirrors_without_repeating_edge() {
        assert_eq!(reflect(-1, 5), 1);
        assert_eq!(reflect(-4, 5), 4);
        assert_eq!(reflect(5, 5), 3);
        assert_eq!(reflect(8, 5), 0);
    }
}
