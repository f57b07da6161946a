#![allow(dead_code)]

use std::f64::consts::PI;

use mkmeans::engine::{Engine, EngineConfig};
use mkmeans::{Chroma, PointSet, Raster, RgbColor};
use rand::Rng;
use rand_distr::{Distribution, Normal};

pub fn engine(workers: usize, chunk_size: usize) -> Engine {
    Engine::new(EngineConfig::new(workers, chunk_size).unwrap()).unwrap()
}

/// Centers of `g` blobs on a regular polygon whose side is `separation`.
pub fn polygon_centers(g: usize, separation: f64) -> Vec<Chroma> {
    let radius = separation / (2.0 * (PI / g as f64).sin());
    (0..g)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / g as f64;
            Chroma::new(radius * t.cos(), radius * t.sin())
        })
        .collect()
}

/// `n` isotropic Gaussian points spread round-robin over `centers`.
pub fn gaussian_blobs<R: Rng>(centers: &[Chroma], n: usize, sigma: f64, rng: &mut R) -> PointSet {
    let noise = Normal::new(0.0, sigma).unwrap();
    PointSet::from_features(
        (0..n)
            .map(|i| {
                let c = centers[i % centers.len()];
                Chroma::new(c.a + noise.sample(rng), c.b + noise.sample(rng))
            })
            .collect(),
    )
}

pub fn uniform_points<R: Rng>(n: usize, extent: f64, rng: &mut R) -> PointSet {
    PointSet::from_features(
        (0..n)
            .map(|_| {
                Chroma::new(
                    rng.gen_range(-extent..extent),
                    rng.gen_range(-extent..extent),
                )
            })
            .collect(),
    )
}

fn dist_sq(p: Chroma, q: Chroma) -> f64 {
    (p.a - q.a).powi(2) + (p.b - q.b).powi(2)
}

/// Sequential k-means++ seeding: every center after the first is drawn
/// with probability proportional to its squared distance to the nearest
/// chosen center.
pub fn kmeanspp_oracle<R: Rng>(points: &[Chroma], k: usize, rng: &mut R) -> Vec<Chroma> {
    let mut centers = vec![points[rng.gen_range(0..points.len())]];
    let mut d2: Vec<f64> = points.iter().map(|&p| dist_sq(p, centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let mut target = rng.gen::<f64>() * total;
        let mut pick = points.len() - 1;
        for (i, &w) in d2.iter().enumerate() {
            if target < w {
                pick = i;
                break;
            }
            target -= w;
        }
        let c = points[pick];
        centers.push(c);
        for (d, &p) in d2.iter_mut().zip(points) {
            *d = d.min(dist_sq(p, c));
        }
    }
    centers
}

/// Mean simplified silhouette recomputed per point from scratch.
pub fn brute_force_ssi(points: &[Chroma], labels: &[u16], centers: &[Chroma]) -> f64 {
    let mut total = 0.0;
    for (&p, &l) in points.iter().zip(labels) {
        let a = dist_sq(p, centers[l as usize]).sqrt();
        let mut b = f64::INFINITY;
        for (j, &c) in centers.iter().enumerate() {
            if j != l as usize {
                b = b.min(dist_sq(p, c).sqrt());
            }
        }
        let denom = a.max(b).max(1e-12);
        total += (b - a) / denom;
    }
    total / points.len() as f64
}

/// A blocky land-cover style raster: rectangular patches drawn from
/// `palette`, each pixel jittered by up to `noise` per channel.
pub fn patchwork<R: Rng>(
    width: u32,
    height: u32,
    palette: &[RgbColor],
    noise: i16,
    rng: &mut R,
) -> Raster {
    let patch = 24;
    let cols = width.div_ceil(patch);
    let rows = height.div_ceil(patch);
    let patches: Vec<RgbColor> = (0..cols * rows)
        .map(|_| palette[rng.gen_range(0..palette.len())])
        .collect();
    let jitter =
        |v: u8, rng: &mut R| (v as i16 + rng.gen_range(-noise..=noise)).clamp(0, 255) as u8;
    let mut pixels = Vec::with_capacity((width * height) as usize);
    for y in 0..height {
        for x in 0..width {
            let c = patches[((y / patch) * cols + x / patch) as usize];
            pixels.push(RgbColor::new(
                jitter(c.r, rng),
                jitter(c.g, rng),
                jitter(c.b, rng),
            ));
        }
    }
    Raster::new(width, height, pixels).unwrap()
}

pub const LAND_COVER: [RgbColor; 7] = [
    RgbColor::new(34, 139, 34),
    RgbColor::new(0, 92, 170),
    RgbColor::new(210, 180, 140),
    RgbColor::new(128, 128, 128),
    RgbColor::new(240, 240, 230),
    RgbColor::new(160, 82, 45),
    RgbColor::new(154, 205, 50),
];
