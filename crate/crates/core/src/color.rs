//! Pixel extraction and the sRGB → CIELAB projection that every later phase
//! clusters in.

use std::collections::HashMap;
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use thiserror::Error;

use crate::engine::{Engine, JobError};
use crate::sequence_store::Raster;

/// 8-bit sRGB color.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RgbColor {
    pub r: u8,
    pub g: u8,
    pub b: u8,
}

impl RgbColor {
    pub const fn new(r: u8, g: u8, b: u8) -> Self {
        Self { r, g, b }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid color {0:?}: expected r:g:b with channels in 0..=255")]
pub struct ParseColorError(pub String);

/// Parses the `r:g:b` form used in the points file.
impl FromStr for RgbColor {
    type Err = ParseColorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseColorError(s.to_owned());
        let mut parts = s.split(':').map(|p| p.trim().parse::<u8>());
        let mut next = || parts.next().ok_or_else(err)?.map_err(|_| err());
        let color = RgbColor::new(next()?, next()?, next()?);
        if parts.next().is_some() {
            return Err(err());
        }
        Ok(color)
    }
}

impl fmt::Display for RgbColor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.r, self.g, self.b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LabColor {
    pub l_star: f64,
    pub a_star: f64,
    pub b_star: f64,
}

impl LabColor {
    pub fn chroma(&self) -> Chroma {
        Chroma::new(self.a_star, self.b_star)
    }
}

/// A point in the (a*, b*) plane: the feature vector that gets clustered.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Chroma {
    pub a: f64,
    pub b: f64,
}

impl Chroma {
    pub const fn new(a: f64, b: f64) -> Self {
        Self { a, b }
    }

    pub(crate) fn bits(&self) -> (u64, u64) {
        (self.a.to_bits(), self.b.to_bits())
    }
}

// Linear sRGB -> XYZ for the D65 white, full precision so that the rows sum
// to the white point and neutral colors land on a* = b* = 0.
const SRGB_TO_XYZ: [[f64; 3]; 3] = [
    [
        0.412_390_799_265_959_34,
        0.357_584_339_383_878,
        0.180_480_788_401_834_3,
    ],
    [
        0.212_639_005_871_510_27,
        0.715_168_678_767_756,
        0.072_192_315_360_733_71,
    ],
    [
        0.019_330_818_715_591_82,
        0.119_194_779_794_625_98,
        0.950_532_152_249_660_7,
    ],
];
const D65_WHITE: [f64; 3] = [0.3127 / 0.3290, 1.0, (1.0 - 0.3127 - 0.3290) / 0.3290];
const LAB_EPSILON: f64 = 216.0 / 24389.0;
const LAB_KAPPA: f64 = 24389.0 / 27.0;

fn srgb_decode(channel: u8) -> f64 {
    let c = channel as f64 / 255.0;
    if c <= 0.040_45 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

fn lab_f(t: f64) -> f64 {
    if t > LAB_EPSILON {
        t.cbrt()
    } else {
        (LAB_KAPPA * t + 16.0) / 116.0
    }
}

/// sRGB (gamma-encoded, D65) → CIE XYZ → CIE L*a*b*.
pub fn rgb_to_lab(c: RgbColor) -> LabColor {
    let lin = [srgb_decode(c.r), srgb_decode(c.g), srgb_decode(c.b)];
    let xyz: [f64; 3] = std::array::from_fn(|row| {
        SRGB_TO_XYZ[row]
            .iter()
            .zip(lin)
            .map(|(m, v)| m * v)
            .sum::<f64>()
    });
    let [xr, yr, zr] = std::array::from_fn(|i| xyz[i] / D65_WHITE[i]);
    let (fx, fy, fz) = (lab_f(xr), lab_f(yr), lab_f(zr));
    let l_star = if yr > LAB_EPSILON {
        116.0 * fy - 16.0
    } else {
        LAB_KAPPA * yr
    };
    LabColor {
        l_star,
        a_star: 500.0 * (fx - fy),
        b_star: 200.0 * (fy - fz),
    }
}

pub fn lab_distance_sq(p: Chroma, q: Chroma) -> f64 {
    let da = p.a - q.a;
    let db = p.b - q.b;
    da * da + db * db
}

/// One extracted pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct PixelRecord {
    pub image_id: String,
    pub x: u32,
    pub y: u32,
    pub rgb: RgbColor,
    pub feature: Chroma,
}

/// Streams a raster's pixels in row-major order.
pub fn extract_pixels<'a>(
    raster: &'a Raster,
    image_id: &'a str,
) -> impl Iterator<Item = PixelRecord> + 'a {
    let width = raster.width();
    raster
        .pixels()
        .iter()
        .enumerate()
        .map(move |(i, &rgb)| PixelRecord {
            image_id: image_id.to_owned(),
            x: i as u32 % width,
            y: i as u32 / width,
            rgb,
            feature: rgb_to_lab(rgb).chroma(),
        })
}

/// Indexed feature store.
///
/// Every point refers to an entry of a feature table, so repeated colors are
/// stored (and measured against a center set) once. Point order is the
/// record order every job chunks over.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PointSet {
    table: Vec<Chroma>,
    index: Vec<u32>,
}

impl PointSet {
    /// One table entry per point.
    pub fn from_features(features: Vec<Chroma>) -> Self {
        assert!(features.len() <= u32::MAX as usize, "too many points");
        let index = (0..features.len() as u32).collect();
        Self {
            table: features,
            index,
        }
    }

    /// Returns `None` if an index is out of range for `table`.
    pub fn from_parts(table: Vec<Chroma>, index: Vec<u32>) -> Option<Self> {
        index
            .iter()
            .all(|&i| (i as usize) < table.len())
            .then_some(Self { table, index })
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    #[inline]
    pub fn feature(&self, i: usize) -> Chroma {
        self.table[self.index[i] as usize]
    }

    pub fn table(&self) -> &[Chroma] {
        &self.table
    }

    pub fn index(&self) -> &[u32] {
        &self.index
    }

    pub fn iter(&self) -> impl Iterator<Item = Chroma> + '_ {
        self.index.iter().map(|&i| self.table[i as usize])
    }

    /// Evaluates `f` once per feature-table entry as a mapper-only job.
    /// Entry `t` of the result belongs to every point whose index is `t`.
    pub fn map_table<T, F>(&self, engine: &Engine, job: &str, f: F) -> Result<Vec<T>, JobError>
    where
        T: Send,
        F: Fn(Chroma) -> T + Sync,
    {
        let table = &self.table;
        let parts =
            engine.run_map_only(job, table.len(), engine.chunks(table.len()), |_, range| {
                Ok::<_, std::convert::Infallible>(
                    table[range].iter().map(|&c| f(c)).collect::<Vec<T>>(),
                )
            })?;
        Ok(parts.into_iter().flatten().collect())
    }

    /// The point stream repeated `times` times.
    pub fn replicate(&self, times: usize) -> Self {
        Self {
            table: self.table.clone(),
            index: self.index.repeat(times),
        }
    }
}

/// Placement of one image inside a [`PixelTable`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImageSpan {
    pub id: String,
    pub width: u32,
    pub height: u32,
    /// Index of the image's first pixel.
    pub start: usize,
}

impl ImageSpan {
    pub fn len(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// All pixels of a container in extraction order, stored compactly: one
/// `u32` per pixel pointing into a table of distinct colors.
#[derive(Clone, Debug, Default)]
pub struct PixelTable {
    points: PointSet,
    colors: Vec<RgbColor>,
    images: Vec<ImageSpan>,
    lookup: HashMap<RgbColor, u32>,
}

impl PixelTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a raster's pixels (row-major).
    pub fn push_raster(&mut self, image_id: &str, raster: &Raster) {
        self.push_pixels(image_id, raster.width(), raster.height(), raster.pixels());
    }

    fn push_pixels(&mut self, image_id: &str, width: u32, height: u32, pixels: &[RgbColor]) {
        let start = self.points.index.len();
        self.points.index.reserve(pixels.len());
        for &rgb in pixels {
            let slot = match self.lookup.get(&rgb) {
                Some(&slot) => slot,
                None => {
                    let slot = self.colors.len() as u32;
                    self.colors.push(rgb);
                    self.points.table.push(rgb_to_lab(rgb).chroma());
                    self.lookup.insert(rgb, slot);
                    slot
                }
            };
            self.points.index.push(slot);
        }
        self.images.push(ImageSpan {
            id: image_id.to_owned(),
            width,
            height,
            start,
        });
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn images(&self) -> &[ImageSpan] {
        &self.images
    }

    /// Number of distinct colors.
    pub fn distinct_colors(&self) -> usize {
        self.colors.len()
    }

    #[inline]
    pub fn rgb(&self, i: usize) -> RgbColor {
        self.colors[self.points.index[i] as usize]
    }

    /// Image index and (x, y) of pixel `i`.
    pub fn locate(&self, i: usize) -> (usize, u32, u32) {
        let image = self.images.partition_point(|span| span.start <= i) - 1;
        let span = &self.images[image];
        let offset = i - span.start;
        (
            image,
            (offset % span.width as usize) as u32,
            (offset / span.width as usize) as u32,
        )
    }

    pub fn record(&self, i: usize) -> PixelRecord {
        let (image, x, y) = self.locate(i);
        PixelRecord {
            image_id: self.images[image].id.clone(),
            x,
            y,
            rgb: self.rgb(i),
            feature: self.points.feature(i),
        }
    }

    /// The pixel stream repeated `times` times. Copies after the first get
    /// image ids suffixed with `#<copy>`.
    pub fn replicate(&self, times: usize) -> Self {
        let n = self.len();
        let images = (0..times)
            .flat_map(|copy| {
                self.images.iter().map(move |span| ImageSpan {
                    id: if copy == 0 {
                        span.id.clone()
                    } else {
                        format!("{}#{copy}", span.id)
                    },
                    start: span.start + copy * n,
                    ..span.clone()
                })
            })
            .collect();
        Self {
            points: self.points.replicate(times),
            colors: self.colors.clone(),
            images,
            lookup: self.lookup.clone(),
        }
    }

    /// Writes the pixel dump: one `image_id,x,y,r,g,b` line per pixel.
    pub fn write_dump<W: Write>(&self, mut out: W) -> io::Result<()> {
        for span in &self.images {
            for offset in 0..span.len() {
                let rgb = self.rgb(span.start + offset);
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    span.id,
                    offset % span.width as usize,
                    offset / span.width as usize,
                    rgb.r,
                    rgb.g,
                    rgb.b
                )?;
            }
        }
        out.flush()
    }
}
