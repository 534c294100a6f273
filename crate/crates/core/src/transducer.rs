use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::Point;

/// Point transducers on a circle (2D) or sphere (3D) of radius `radius` about the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct TransducerArray {
    dim: usize,
    positions: Vec<Point>,
    normals: Vec<Point>,
    weights: Vec<f64>,
    radius: f64,
    sound_speed: f64,
}

impl TransducerArray {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    /// Unit outward normals.
    pub fn normals(&self) -> &[Point] {
        &self.normals
    }

    /// Quadrature weights of the aperture measure (arc length or area).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn sound_speed(&self) -> f64 {
        self.sound_speed
    }

    /// The transducers at `indices`, keeping their weights.
    pub fn subset(&self, indices: &[usize]) -> Result<TransducerArray> {
        if let Some(&i) = indices.iter().find(|&&i| i >= self.len()) {
            return Err(Error::InvalidArgument(format!("transducer index {i} out of range")));
        }
        Ok(TransducerArray {
            dim: self.dim,
            positions: indices.iter().map(|&i| self.positions[i]).collect(),
            normals: indices.iter().map(|&i| self.normals[i]).collect(),
            weights: indices.iter().map(|&i| self.weights[i]).collect(),
            radius: self.radius,
            sound_speed: self.sound_speed,
        })
    }

    /// Length of the circle or area of the sphere.
    pub fn aperture_measure(&self) -> f64 {
        match self.dim {
            2 => 2.0 * PI * self.radius,
            _ => 4.0 * PI * self.radius * self.radius,
        }
    }
}

/// Equally spaced angles in 2D, a Fibonacci lattice in 3D; equal weights in both.
pub fn make_transducer_array(dim: usize, radius: f64, n: usize, sound_speed: f64) -> Result<TransducerArray> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidArgument(format!("aperture radius must be positive, got {radius}")));
    }
    if n < 4 {
        return Err(Error::InvalidArgument(format!("need at least 4 transducers, got {n}")));
    }
    if !(sound_speed > 0.0) {
        return Err(Error::InvalidArgument(format!("sound speed must be positive, got {sound_speed}")));
    }
    let normals: Vec<Point> = match dim {
        2 => (0..n)
            .map(|i| {
                let a = 2.0 * PI * i as f64 / n as f64;
                [a.cos(), a.sin(), 0.0]
            })
            .collect(),
        3 => {
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..n)
                .map(|i| {
                    let z = 1.0 - (2 * i + 1) as f64 / n as f64;
                    let r = (1.0 - z * z).sqrt();
                    let phi = golden * i as f64;
                    let v = [r * phi.cos(), r * phi.sin(), z];
                    let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                    [v[0] / norm, v[1] / norm, v[2] / norm]
                })
                .collect()
        }
        _ => return Err(Error::UnsupportedDimension(format!("transducer arrays need dim 2 or 3, got {dim}"))),
    };
    let positions = normals.iter().map(|nv| [radius * nv[0], radius * nv[1], radius * nv[2]]).collect();
    let measure = if dim == 2 { 2.0 * PI * radius } else { 4.0 * PI * radius * radius };
    Ok(TransducerArray { dim, positions, normals, weights: vec![measure / n as f64; n], radius, sound_speed })
}
