//! Grayscale conversion, histogram equalization, box-filter downsampling and
//! row-major vectorization. All arithmetic is integer with round-half-up, so
//! results are bit-exact.

use crate::error::{Error, Result};

pub const DEFAULT_SIZE: (usize, usize) = (50, 50);

/// 8-bit image, row-major, channels interleaved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawImage {
    width: usize,
    height: usize,
    channels: u8,
    samples: Vec<u8>,
}

impl RawImage {
    pub fn new(width: usize, height: usize, channels: u8, samples: Vec<u8>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::UnsupportedChannels(channels));
        }
        let expected = width * height * channels as usize;
        if samples.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: samples.len(),
            });
        }
        Ok(RawImage {
            width,
            height,
            channels,
            samples,
        })
    }

    pub fn gray(width: usize, height: usize, samples: Vec<u8>) -> Result<Self> {
        Self::new(width, height, 1, samples)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> u8 {
        self.channels
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    fn expect_gray(&self) -> Result<()> {
        if self.channels == 1 {
            Ok(())
        } else {
            Err(Error::UnsupportedChannels(self.channels))
        }
    }
}

/// `round(num / den)` for nonnegative operands, halves rounded up.
fn div_round(num: u64, den: u64) -> u64 {
    (2 * num + den) / (2 * den)
}

pub fn to_grayscale(img: &RawImage) -> Result<RawImage> {
    match img.channels {
        1 => Ok(img.clone()),
        3 => {
            let samples = img
                .samples
                .chunks_exact(3)
                .map(|p| div_round(p.iter().map(|&c| c as u64).sum(), 3) as u8)
                .collect();
            RawImage::gray(img.width, img.height, samples)
        }
        c => Err(Error::UnsupportedChannels(c)),
    }
}

pub fn equalize(img: &RawImage) -> Result<RawImage> {
    img.expect_gray()?;
    let mut hist = [0u64; 256];
    for &v in &img.samples {
        hist[v as usize] += 1;
    }
    let mut cdf = [0u64; 256];
    let mut acc = 0;
    for (level, &count) in hist.iter().enumerate() {
        acc += count;
        cdf[level] = acc;
    }
    let total = img.samples.len() as u64;
    let cdf_min = cdf.iter().copied().find(|&c| c > 0).unwrap_or(0);
    if total == cdf_min {
        return Ok(img.clone());
    }
    let span = total - cdf_min;
    let lut: Vec<u8> = cdf
        .iter()
        .map(|&c| div_round(c.saturating_sub(cdf_min) * 255, span) as u8)
        .collect();
    let samples = img.samples.iter().map(|&v| lut[v as usize]).collect();
    RawImage::gray(img.width, img.height, samples)
}

/// Area-averaging downsample. Each target pixel averages the source region it
/// covers, weighting partially covered source pixels by their overlap.
pub fn downsample(img: &RawImage, target_w: usize, target_h: usize) -> Result<RawImage> {
    img.expect_gray()?;
    let (src_w, src_h) = (img.width, img.height);
    if target_w > src_w || target_h > src_h || target_w == 0 || target_h == 0 {
        return Err(Error::UpsampleRequested {
            src_w,
            src_h,
            dst_w: target_w,
            dst_h: target_h,
        });
    }
    // Work in coordinates scaled by the target size so every boundary is an
    // integer: source pixel x spans [x*tw, (x+1)*tw), target j spans [j*sw, (j+1)*sw).
    let spans = |src: usize, dst: usize| -> Vec<Vec<(usize, u64)>> {
        (0..dst)
            .map(|j| {
                let (lo, hi) = (j * src, (j + 1) * src);
                (lo / dst..hi.div_ceil(dst))
                    .filter_map(|x| {
                        let overlap = hi.min((x + 1) * dst).saturating_sub(lo.max(x * dst));
                        (overlap > 0).then_some((x, overlap as u64))
                    })
                    .collect()
            })
            .collect()
    };
    let cols = spans(src_w, target_w);
    let rows = spans(src_h, target_h);
    let area = (src_w * src_h) as u64;
    let mut samples = Vec::with_capacity(target_w * target_h);
    for row in &rows {
        for col in &cols {
            let mut sum = 0u64;
            for &(y, wy) in row {
                let line = &img.samples[y * src_w..(y + 1) * src_w];
                for &(x, wx) in col {
                    sum += line[x] as u64 * wx * wy;
                }
            }
            samples.push(div_round(sum, area) as u8);
        }
    }
    RawImage::gray(target_w, target_h, samples)
}

/// Row-major concatenation of a grayscale image.
pub fn vectorize(img: &RawImage) -> Result<Vec<f64>> {
    img.expect_gray()?;
    Ok(img.samples.iter().map(|&v| v as f64).collect())
}

/// Full pipeline: grayscale, equalize, downsample, vectorize.
pub fn preprocess(img: &RawImage, target_w: usize, target_h: usize) -> Result<Vec<f64>> {
    let gray = to_grayscale(img)?;
    let eq = equalize(&gray)?;
    let small = downsample(&eq, target_w, target_h)?;
    vectorize(&small)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grayscale_averages_and_rounds() {
        let img = RawImage::new(2, 1, 3, vec![30, 60, 90, 0, 0, 1]).unwrap();
        assert_eq!(to_grayscale(&img).unwrap().samples(), &[60, 0]);
        let img = RawImage::new(1, 1, 3, vec![0, 1, 1]).unwrap();
        assert_eq!(to_grayscale(&img).unwrap().samples(), &[1]); // 2/3 rounds up
        let gray = RawImage::gray(2, 1, vec![5, 6]).unwrap();
        assert_eq!(to_grayscale(&gray).unwrap(), gray);
    }

    #[test]
    fn unsupported_channels() {
        assert!(matches!(
            RawImage::new(1, 1, 2, vec![0, 0]),
            Err(Error::UnsupportedChannels(2))
        ));
    }

    #[test]
    fn equalize_constant_is_identity() {
        let img = RawImage::gray(3, 3, vec![42; 9]).unwrap();
        assert_eq!(equalize(&img).unwrap(), img);
    }

    #[test]
    fn equalize_two_level() {
        let img = RawImage::gray(2, 2, vec![0, 255, 0, 255]).unwrap();
        assert_eq!(equalize(&img).unwrap().samples(), &[0, 255, 0, 255]);
        // (cdf - cdf_min) / (P - cdf_min) * 255 with cdf(10)=2, cdf(20)=4, cdf_min=2
        let img = RawImage::gray(2, 2, vec![10, 20, 10, 20]).unwrap();
        assert_eq!(equalize(&img).unwrap().samples(), &[0, 255, 0, 255]);
    }

    #[test]
    fn equalize_ramp_is_identity() {
        let img = RawImage::gray(16, 16, (0..=255).collect()).unwrap();
        let eq = equalize(&img).unwrap();
        assert_eq!(eq, img);
        assert_eq!(equalize(&eq).unwrap(), eq);
    }

    #[test]
    fn downsample_block_mean() {
        let img = RawImage::gray(2, 2, vec![0, 0, 0, 4]).unwrap();
        assert_eq!(downsample(&img, 1, 1).unwrap().samples(), &[1]);
    }

    #[test]
    fn downsample_identity_and_constant() {
        let img = RawImage::gray(3, 2, vec![1, 2, 3, 4, 5, 6]).unwrap();
        assert_eq!(downsample(&img, 3, 2).unwrap(), img);
        let flat = RawImage::gray(100, 100, vec![7; 10_000]).unwrap();
        let small = downsample(&flat, 50, 50).unwrap();
        assert!(small.samples().iter().all(|&v| v == 7));
        assert_eq!(small.samples().len(), 2500);
    }

    #[test]
    fn downsample_fractional_overlap() {
        // 3 -> 2: target 0 covers x0 fully and half of x1
        let img = RawImage::gray(3, 1, vec![0, 90, 180]).unwrap();
        // (0*2 + 90*1) / 3 = 30, (90*1 + 180*2) / 3 = 150
        assert_eq!(downsample(&img, 2, 1).unwrap().samples(), &[30, 150]);
    }

    #[test]
    fn downsample_rejects_upsample() {
        let img = RawImage::gray(2, 2, vec![0; 4]).unwrap();
        assert!(matches!(downsample(&img, 3, 2), Err(Error::UpsampleRequested { .. })));
    }

    #[test]
    fn vectorize_row_major() {
        let img = RawImage::gray(2, 2, vec![1, 2, 3, 4]).unwrap();
        assert_eq!(vectorize(&img).unwrap(), vec![1.0, 2.0, 3.0, 4.0]);
        let line = RawImage::gray(4, 1, vec![9, 8, 7, 6]).unwrap();
        assert_eq!(vectorize(&line).unwrap(), vec![9.0, 8.0, 7.0, 6.0]);
    }

    #[test]
    fn pipeline_dimension() {
        let img = RawImage::new(180, 200, 3, (0..180 * 200 * 3).map(|i| (i % 251) as u8).collect()).unwrap();
        let v = preprocess(&img, 50, 50).unwrap();
        assert_eq!(v.len(), 2500);
    }
}
