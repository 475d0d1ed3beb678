//! Structured quadrilateral meshes for the single-edge-notched specimens.
//!
//! The notch is a geometric seam: nodes on the notch line strictly left of
//! the tip are duplicated, elements below the seam reference the lower copies
//! and elements above reference the upper copies, so the two crack faces can
//! separate freely. Duplicates are numbered next to their originals to keep
//! the stiffness bandwidth proportional to one node row.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("mesh needs at least 4 divisions per direction, got {nx} x {ny}")]
    TooCoarse { nx: usize, ny: usize },
    #[error("notch must end on an element column boundary: length {len} with dx = {dx}")]
    NotchOffGrid { len: f64, dx: f64 },
    #[error("notch row must lie on an element row boundary (ny even), got ny = {ny}")]
    NotchRowOffGrid { ny: usize },
    #[error("notch must stay strictly inside the specimen: {len} >= width {width}")]
    NotchTooLong { len: f64, width: f64 },
    #[error("fiber regions must cover the specimen height contiguously")]
    BadRegions,
}

/// Geometry block of a job: a rectangular specimen with an optional
/// horizontal edge notch at mid-height, meshed by a structured grid.
#[derive(Debug, Clone)]
pub struct Geometry {
    pub width: f64,
    pub height: f64,
    pub notch_length: f64,
    pub nx: usize,
    pub ny: usize,
    pub thickness: f64,
    /// Region boundaries as ascending y-coordinates; `regions.len() + 1`
    /// fiber specifications are expected when non-empty.
    pub region_splits: Vec<f64>,
}

impl Default for Geometry {
    fn default() -> Self {
        Self {
            width: 1.0,
            height: 1.0,
            notch_length: 0.5,
            nx: 100,
            ny: 100,
            thickness: 1.0,
            region_splits: Vec::new(),
        }
    }
}

/// Quadrilateral mesh with node sets and per-element region labels.
#[derive(Debug, Clone)]
pub struct Mesh {
    /// Node coordinates (mm).
    pub nodes: Vec<[f64; 2]>,
    /// Counter-clockwise corner nodes per element.
    pub elems: Vec<[usize; 4]>,
    /// Region label per element, indexing the per-region fiber families.
    pub regions: Vec<usize>,
    pub top: Vec<usize>,
    pub bottom: Vec<usize>,
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    /// Lower crack-face copies of the seam nodes, left of the tip.
    pub notch_lower: Vec<usize>,
    /// Upper crack-face copies.
    pub notch_upper: Vec<usize>,
    pub thickness: f64,
}

impl Mesh {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_elems(&self) -> usize {
        self.elems.len()
    }

    /// Maximum node-index span within one element, which bounds the
    /// stiffness half-bandwidth.
    pub fn node_span(&self) -> usize {
        self.elems
            .iter()
            .map(|e| e.iter().max().unwrap() - e.iter().min().unwrap())
            .max()
            .unwrap_or(0)
    }
}

/// Generates the structured grid with the duplicated notch seam.
pub fn generate_mesh(geo: &Geometry) -> Result<Mesh, MeshError> {
    let (nx, ny) = (geo.nx, geo.ny);
    if nx < 4 || ny < 4 {
        return Err(MeshError::TooCoarse { nx, ny });
    }
    let dx = geo.width / nx as f64;
    let dy = geo.height / ny as f64;

    let notch_cols = if geo.notch_length > 0.0 {
        if geo.notch_length >= geo.width {
            return Err(MeshError::NotchTooLong {
                len: geo.notch_length,
                width: geo.width,
            });
        }
        if ny % 2 != 0 {
            return Err(MeshError::NotchRowOffGrid { ny });
        }
        let cols = geo.notch_length / dx;
        if (cols - cols.round()).abs() > 1e-9 * nx as f64 {
            return Err(MeshError::NotchOffGrid {
                len: geo.notch_length,
                dx,
            });
        }
        cols.round() as usize
    } else {
        0
    };
    let seam_row = ny / 2;

    // Node numbering: row-major; on the seam row each duplicated column
    // contributes the lower copy first, then the upper copy.
    let mut nodes = Vec::new();
    let mut lower_id = vec![usize::MAX; (nx + 1) * (ny + 1)];
    let mut upper_id = vec![usize::MAX; (nx + 1) * (ny + 1)];
    let mut notch_lower = Vec::new();
    let mut notch_upper = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            let xy = [i as f64 * dx, j as f64 * dy];
            let id = nodes.len();
            nodes.push(xy);
            lower_id[j * (nx + 1) + i] = id;
            if notch_cols > 0 && j == seam_row && i < notch_cols {
                let dup = nodes.len();
                nodes.push(xy);
                upper_id[j * (nx + 1) + i] = dup;
                notch_lower.push(id);
                notch_upper.push(dup);
            } else {
                upper_id[j * (nx + 1) + i] = id;
            }
        }
    }

    // Elements below the seam use lower copies on their top edge; elements
    // above use upper copies on their bottom edge.
    let mut elems = Vec::with_capacity(nx * ny);
    let mut regions = Vec::with_capacity(nx * ny);
    let pick = |i: usize, j: usize, from_above: bool| -> usize {
        if from_above {
            upper_id[j * (nx + 1) + i]
        } else {
            lower_id[j * (nx + 1) + i]
        }
    };
    for j in 0..ny {
        for i in 0..nx {
            // Corner rows j (bottom) and j+1 (top): the bottom corners are
            // seen "from above" by this element, the top ones "from below".
            let n0 = pick(i, j, true);
            let n1 = pick(i + 1, j, true);
            let n2 = pick(i + 1, j + 1, false);
            let n3 = pick(i, j + 1, false);
            elems.push([n0, n1, n2, n3]);

            let yc = (j as f64 + 0.5) * dy;
            let mut region = 0;
            for (r, split) in geo.region_splits.iter().enumerate() {
                if yc > *split {
                    region = r + 1;
                }
            }
            regions.push(region);
        }
    }

    let close = |a: f64, b: f64| (a - b).abs() < 1e-12 * geo.width.max(geo.height);
    let mut top = Vec::new();
    let mut bottom = Vec::new();
    let mut left = Vec::new();
    let mut right = Vec::new();
    for (id, xy) in nodes.iter().enumerate() {
        if close(xy[1], geo.height) {
            top.push(id);
        }
        if close(xy[1], 0.0) {
            bottom.push(id);
        }
        if close(xy[0], 0.0) {
            left.push(id);
        }
        if close(xy[0], geo.width) {
            right.push(id);
        }
    }

    Ok(Mesh {
        nodes,
        elems,
        regions,
        top,
        bottom,
        left,
        right,
        notch_lower,
        notch_upper,
        thickness: geo.thickness,
    })
}
