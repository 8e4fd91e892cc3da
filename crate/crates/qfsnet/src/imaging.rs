//! Gray images, binary masks, normalization and disk-opening cleanup.

use crate::error::{Error, Result};
use crate::lattice::FuzzyField;

pub const MIN_SIDE: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    maxval: u16,
    data: Vec<u16>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, maxval: u16, data: Vec<u16>) -> Result<Self> {
        if width < MIN_SIDE || height < MIN_SIDE {
            return Err(Error::Shape(format!(
                "image {width}x{height} is smaller than {MIN_SIDE}x{MIN_SIDE}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::Shape(format!("{} samples for {width}x{height}", data.len())));
        }
        if maxval == 0 {
            return Err(Error::Format("maxval must be positive".into()));
        }
        if let Some(v) = data.iter().find(|&&v| v > maxval) {
            return Err(Error::Format(format!("sample {v} exceeds maxval {maxval}")));
        }
        Ok(Self {
            width,
            height,
            maxval,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn maxval(&self) -> u16 {
        self.maxval
    }

    pub fn bits(&self) -> u8 {
        if self.maxval <= 255 {
            8
        } else {
            16
        }
    }

    pub fn values(&self) -> &[u16] {
        &self.data
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::Shape(format!("{} bits for {width}x{height}", bits.len())));
        }
        Ok(Self { width, height, bits })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// 8-bit image with foreground 255 and background 0.
    pub fn to_gray(&self) -> Result<GrayImage> {
        let data = self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect();
        GrayImage::new(self.width, self.height, 255, data)
    }

    /// Nonzero samples are foreground.
    pub fn from_gray(img: &GrayImage) -> Self {
        Self {
            width: img.width,
            height: img.height,
            bits: img.data.iter().map(|&v| v > 0).collect(),
        }
    }

    pub fn is_subset_of(&self, other: &Mask) -> bool {
        self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }
}

/// Min-max normalization to [0,1]; a constant image maps to 0.5 everywhere.
pub fn normalize(img: &GrayImage) -> FuzzyField {
    let lo = *img.data.iter().min().expect("non-empty");
    let hi = *img.data.iter().max().expect("non-empty");
    let mu = if hi == lo {
        vec![0.5; img.data.len()]
    } else {
        let span = (hi - lo) as f64;
        img.data.iter().map(|&v| (v - lo) as f64 / span).collect()
    };
    FuzzyField::new(img.width, img.height, mu).expect("normalized values are in range")
}

pub const DEFAULT_THRESH: f64 = 0.5;
pub const DEFAULT_RADIUS: usize = 5;

pub fn binarize(field: &FuzzyField, thresh: f64) -> Result<Mask> {
    if !(thresh > 0.0 && thresh < 1.0) {
        return Err(Error::Domain(format!("threshold {thresh} not in (0,1)")));
    }
    Mask::new(
        field.width(),
        field.height(),
        field.values().iter().map(|&m| m >= thresh).collect(),
    )
}

pub fn disk_offsets(radius: usize) -> Vec<(isize, isize)> {
    let r = radius as isize;
    let mut out = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy <= r * r {
                out.push((dx, dy));
            }
        }
    }
    out
}

fn erode(m: &Mask, se: &[(isize, isize)]) -> Mask {
    let (w, h) = (m.width as isize, m.height as isize);
    let bits = (0..m.bits.len())
        .map(|i| {
            let (x, y) = ((i % m.width) as isize, (i / m.width) as isize);
            se.iter().all(|&(dx, dy)| {
                let (nx, ny) = (x + dx, y + dy);
                nx >= 0 && ny >= 0 && nx < w && ny < h && m.bits[(ny * w + nx) as usize]
            })
        })
        .collect();
    Mask { bits, ..*m }
}

fn dilate(m: &Mask, se: &[(isize, isize)]) -> Mask {
    let (w, h) = (m.width as isize, m.height as isize);
    let mut bits = vec![false; m.bits.len()];
    for (i, _) in m.bits.iter().enumerate().filter(|(_, &b)| b) {
        let (x, y) = ((i % m.width) as isize, (i / m.width) as isize);
        for &(dx, dy) in se {
            let (nx, ny) = (x + dx, y + dy);
            if nx >= 0 && ny >= 0 && nx < w && ny < h {
                bits[(ny * w + nx) as usize] = true;
            }
        }
    }
    Mask { bits, ..*m }
}

/// Morphological opening with a disk; pixels outside the image count as background.
pub fn disk_cleanup(mask: &Mask, radius: usize) -> Result<Mask> {
    if radius < 1 {
        return Err(Error::Domain("disk radius must be >= 1".into()));
    }
    let se = disk_offsets(radius);
    Ok(dilate(&erode(mask, &se), &se))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_extremes_and_constant() {
        let mut data = vec![0u16; 256];
        data[3] = 255;
        let f = normalize(&GrayImage::new(16, 16, 255, data).unwrap());
        assert_eq!(f.values()[3], 1.0);
        assert_eq!(f.values()[0], 0.0);
        let f = normalize(&GrayImage::new(16, 16, 255, vec![77; 256]).unwrap());
        assert!(f.values().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn normalize_16bit_ramp() {
        let data: Vec<u16> = (0..1024).map(|i| (i * 64) as u16).collect();
        let f = normalize(&GrayImage::new(32, 32, 65535, data).unwrap());
        for (i, &v) in f.values().iter().enumerate() {
            assert!((v - i as f64 / 1023.0).abs() < 1e-12);
        }
    }

    #[test]
    fn binarize_convention() {
        let f = FuzzyField::constant(4, 4, 0.4).unwrap();
        assert_eq!(binarize(&f, 0.5).unwrap().count(), 0);
        let f = FuzzyField::constant(4, 4, 0.5).unwrap();
        assert_eq!(binarize(&f, 0.5).unwrap().count(), 16);
        assert!(binarize(&f, 1.0).is_err());
    }

    fn square(n: usize, x0: usize, y0: usize, side: usize) -> Mask {
        let bits = (0..n * n)
            .map(|i| {
                let (x, y) = (i % n, i / n);
                x >= x0 && x < x0 + side && y >= y0 && y < y0 + side
            })
            .collect();
        Mask::new(n, n, bits).unwrap()
    }

    #[test]
    fn small_blob_removed() {
        let m = square(32, 10, 10, 2);
        assert_eq!(disk_cleanup(&m, 5).unwrap().count(), 0);
        assert_eq!(disk_cleanup(&Mask::empty(20, 20), 5).unwrap().count(), 0);
    }

    #[test]
    fn big_square_only_loses_corners() {
        let m = square(64, 12, 12, 40);
        let o = disk_cleanup(&m, 5).unwrap();
        assert!(o.is_subset_of(&m));
        // interior away from corners is intact
        for y in 12..52 {
            for x in 12..52 {
                let near_corner = !(17..=46).contains(&x) && !(17..=46).contains(&y);
                if !near_corner {
                    assert!(o.get(x, y), "{x},{y}");
                }
            }
        }
        assert!(m.count() - o.count() < 4 * 25);
    }

    #[test]
    fn gray_image_validation() {
        assert!(GrayImage::new(8, 8, 255, vec![0; 64]).is_err());
        assert!(GrayImage::new(16, 16, 255, vec![300; 256]).is_err());
        assert_eq!(GrayImage::new(16, 16, 1023, vec![0; 256]).unwrap().bits(), 16);
    }
}
