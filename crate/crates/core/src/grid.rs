//! Uniform Cartesian grids on `R^{2n}`, node classification and sampled fields.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Arc;

use crate::domain::DomainSpec;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum NodeClass {
    Exterior = 0,
    Interior = 1,
    Band = 2,
}

#[derive(Debug, Clone)]
pub struct GridOptions {
    /// Stencil reach in cells (infinity norm); nodes outside the domain but
    /// within this many cells of an interior node form the boundary band.
    pub reach_cells: usize,
    pub node_budget: usize,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self { reach_cells: 3, node_budget: 20_000_000 }
    }
}

/// Node `k` (multi-index) sits at `(origin_index + k) * h`. Storing the origin
/// as an integer keeps nodes shared by a grid and its refinement bit-identical.
#[derive(Debug, Clone)]
pub struct Grid {
    pub n: usize,
    pub h: f64,
    pub origin_index: Vec<i64>,
    pub extents: Vec<usize>,
    pub strides: Vec<usize>,
    pub class: Vec<NodeClass>,
    pub interior: Vec<usize>,
    pub band: Vec<usize>,
    /// Width of the boundary band in cells.
    pub reach_cells: usize,
}

impl Grid {
    fn from_parts(
        n: usize,
        h: f64,
        origin_index: Vec<i64>,
        extents: Vec<usize>,
        class: Vec<NodeClass>,
        reach_cells: usize,
    ) -> Self {
        let strides = strides_of(&extents);
        let mut interior = Vec::new();
        let mut band = Vec::new();
        for (i, c) in class.iter().enumerate() {
            match c {
                NodeClass::Interior => interior.push(i),
                NodeClass::Band => band.push(i),
                NodeClass::Exterior => {}
            }
        }
        Grid { n, h, origin_index, extents, strides, class, interior, band, reach_cells }
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn len(&self) -> usize {
        self.class.len()
    }

    pub fn is_empty(&self) -> bool {
        self.class.is_empty()
    }

    pub fn multi_index(&self, mut lin: usize, out: &mut [usize]) {
        for d in (0..self.dim()).rev() {
            out[d] = lin % self.extents[d];
            lin /= self.extents[d];
        }
    }

    pub fn linear_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn coord(&self, lin: usize, out: &mut [f64]) {
        let mut rem = lin;
        for d in (0..self.dim()).rev() {
            let k = rem % self.extents[d];
            rem /= self.extents[d];
            out[d] = (self.origin_index[d] + k as i64) as f64 * self.h;
        }
    }

    pub fn coords(&self, lin: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        self.coord(lin, &mut x);
        x
    }

    /// Linear index of the node at integer grid position `global` (the same
    /// units as `origin_index`), if it lies in the array.
    pub fn node_at_global(&self, global: &[i64]) -> Option<usize> {
        let mut lin = 0;
        for d in 0..self.dim() {
            let k = global[d] - self.origin_index[d];
            if k < 0 || k as usize >= self.extents[d] {
                return None;
            }
            lin += k as usize * self.strides[d];
        }
        Some(lin)
    }

    /// Smallest distance, in cells, from the node to the edge of the array.
    pub fn cells_to_edge(&self, lin: usize) -> usize {
        let mut rem = lin;
        let mut best = usize::MAX;
        for d in (0..self.dim()).rev() {
            let k = rem % self.extents[d];
            rem /= self.extents[d];
            best = best.min(k).min(self.extents[d] - 1 - k);
        }
        best
    }

    /// True when both grids index the same nodes.
    pub fn same_layout(&self, other: &Grid) -> bool {
        self.n == other.n
            && self.h == other.h
            && self.origin_index == other.origin_index
            && self.extents == other.extents
            && self.class == other.class
            && self.reach_cells == other.reach_cells
    }
}

fn strides_of(extents: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; extents.len()];
    for d in (0..extents.len().saturating_sub(1)).rev() {
        strides[d] = strides[d + 1] * extents[d + 1];
    }
    strides
}

/// Builds the grid covering the bounding box of the domain inflated by
/// `margin` and classifies every node.
pub fn build_grid(domain: &DomainSpec, h: f64, margin: f64, opts: &GridOptions) -> Result<Grid> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::Input(format!("grid spacing {h} must be positive")));
    }
    if !(margin >= 0.0) {
        return Err(Error::Input(format!("grid margin {margin} must be nonnegative")));
    }
    let dim = domain.real_dim();
    let mut origin_index = Vec::with_capacity(dim);
    let mut extents = Vec::with_capacity(dim);
    let mut count: usize = 1;
    for d in 0..dim {
        let lo = ((domain.bbox_lo[d] - margin) / h + 1e-9).floor() as i64;
        let hi = ((domain.bbox_hi[d] + margin) / h - 1e-9).ceil() as i64;
        let e = (hi - lo + 1) as usize;
        origin_index.push(lo);
        extents.push(e);
        count = count.saturating_mul(e);
    }
    if count > opts.node_budget {
        return Err(Error::Resource { count, budget: opts.node_budget });
    }

    let strides = strides_of(&extents);
    let mut inside = vec![false; count];
    let mut x = vec![0.0; dim];
    let mut idx = vec![0usize; dim];
    for lin in 0..count {
        for d in 0..dim {
            x[d] = (origin_index[d] + idx[d] as i64) as f64 * h;
        }
        inside[lin] = domain.rho(&x) < 0.0;
        // odometer increment, last axis fastest
        for d in (0..dim).rev() {
            idx[d] += 1;
            if idx[d] < extents[d] {
                break;
            }
            idx[d] = 0;
        }
    }

    let near = dilate(&inside, &extents, &strides, opts.reach_cells);
    let class: Vec<NodeClass> = inside
        .iter()
        .zip(&near)
        .map(|(&i, &b)| {
            if i {
                NodeClass::Interior
            } else if b {
                NodeClass::Band
            } else {
                NodeClass::Exterior
            }
        })
        .collect();
    let grid = Grid::from_parts(domain.n, h, origin_index, extents, class, opts.reach_cells);
    if let Some(&bad) = grid.interior.iter().find(|&&i| grid.cells_to_edge(i) < opts.reach_cells) {
        return Err(Error::Input(format!(
            "grid margin {margin} too small: interior node {bad} is within {} cells of the array edge",
            opts.reach_cells
        )));
    }
    Ok(grid)
}

/// Infinity-norm dilation of a mask, one axis at a time.
fn dilate(mask: &[bool], extents: &[usize], strides: &[usize], r: usize) -> Vec<bool> {
    let mut cur = mask.to_vec();
    if r == 0 {
        return cur;
    }
    let mut next = vec![false; cur.len()];
    for (&ext, &stride) in extents.iter().zip(strides) {
        for lin in 0..cur.len() {
            let k = (lin / stride) % ext;
            let lo = k.saturating_sub(r);
            let hi = (k + r).min(ext - 1);
            let base = lin - k * stride;
            next[lin] = (lo..=hi).any(|m| cur[base + m * stride]);
        }
        std::mem::swap(&mut cur, &mut next);
    }
    cur
}

/// One real value per node. Exterior nodes hold NaN.
#[derive(Debug, Clone)]
pub struct ScalarField {
    pub grid: Arc<Grid>,
    pub values: Vec<f64>,
    pub metadata: String,
}

impl ScalarField {
    pub fn new(grid: Arc<Grid>, metadata: impl Into<String>) -> Self {
        let values = vec![f64::NAN; grid.len()];
        Self { grid, values, metadata: metadata.into() }
    }

    /// Samples `f` at every interior and band node.
    pub fn from_fn<F: Fn(&[f64]) -> f64>(grid: Arc<Grid>, metadata: impl Into<String>, f: F) -> Self {
        let mut field = Self::new(grid, metadata);
        let mut x = vec![0.0; field.grid.dim()];
        let grid = field.grid.clone();
        for &i in grid.interior.iter().chain(&grid.band) {
            grid.coord(i, &mut x);
            field.values[i] = f(&x);
        }
        field
    }

    pub fn max_abs_diff_interior(&self, other: &ScalarField) -> f64 {
        self.grid
            .interior
            .iter()
            .map(|&i| (self.values[i] - other.values[i]).abs())
            .fold(0.0, f64::max)
    }

    /// Multilinear interpolation at an arbitrary point; `None` if the cell
    /// leaves the array or touches an exterior node.
    pub fn interpolate(&self, x: &[f64]) -> Option<f64> {
        let g = &self.grid;
        let dim = g.dim();
        let mut base = vec![0i64; dim];
        let mut theta = vec![0.0; dim];
        for d in 0..dim {
            let s = x[d] / g.h;
            let fl = s.floor();
            base[d] = fl as i64;
            theta[d] = s - fl;
        }
        let mut acc = 0.0;
        let mut corner = vec![0i64; dim];
        for mask in 0..(1usize << dim) {
            let mut w = 1.0;
            for d in 0..dim {
                let bit = (mask >> d) & 1;
                corner[d] = base[d] + bit as i64;
                w *= if bit == 1 { theta[d] } else { 1.0 - theta[d] };
            }
            if w == 0.0 {
                continue;
            }
            let lin = g.node_at_global(&corner)?;
            let v = self.values[lin];
            if !v.is_finite() {
                return None;
            }
            acc += w * v;
        }
        Some(acc)
    }
}

/// Header fields for the CSV field format.
#[derive(Debug, Clone, Default)]
pub struct FieldHeader {
    pub domain: String,
    pub directions: String,
    pub tol: f64,
    pub iterations: usize,
    pub config: Vec<String>,
}

pub fn write_field(path: &Path, field: &ScalarField, header: &FieldHeader) -> Result<()> {
    let mut out = String::new();
    let g = &field.grid;
    let join_i = |v: &[i64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    let join_u = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    writeln!(out, "# shl-monge field v{}", env!("CARGO_PKG_VERSION")).unwrap();
    writeln!(out, "# n = {}", g.n).unwrap();
    writeln!(out, "# h = {}", g.h).unwrap();
    writeln!(out, "# origin_index = {}", join_i(&g.origin_index)).unwrap();
    writeln!(out, "# extents = {}", join_u(&g.extents)).unwrap();
    writeln!(out, "# reach_cells = {}", g.reach_cells).unwrap();
    writeln!(out, "# domain = {}", header.domain).unwrap();
    writeln!(out, "# directions = {}", header.directions).unwrap();
    writeln!(out, "# tol = {}", header.tol).unwrap();
    writeln!(out, "# iterations = {}", header.iterations).unwrap();
    writeln!(out, "# metadata = {}", field.metadata).unwrap();
    for line in &header.config {
        writeln!(out, "# config: {line}").unwrap();
    }
    let mut x = vec![0.0; g.dim()];
    for (i, c) in g.class.iter().enumerate() {
        let tag = match c {
            NodeClass::Interior => 'I',
            NodeClass::Band => 'B',
            NodeClass::Exterior => continue,
        };
        g.coord(i, &mut x);
        for xi in &x {
            write!(out, "{xi},").unwrap();
        }
        writeln!(out, "{},{tag}", field.values[i]).unwrap();
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

/// Inverse of [`write_field`]; values come back bit-identical.
pub fn read_field(path: &Path) -> Result<(ScalarField, FieldHeader)> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut n = None;
    let mut h = None;
    let mut origin = None;
    let mut extents: Option<Vec<usize>> = None;
    let mut reach_cells = 0usize;
    let mut header = FieldHeader::default();
    let mut metadata = String::new();
    let mut rows: Vec<(Vec<f64>, f64, NodeClass, usize)> = Vec::new();
    let perr = |line: usize, msg: String| Error::Parse { line, msg };
    for (ln, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = ln + 1;
        if let Some(rest) = line.strip_prefix("# ") {
            if let Some(c) = rest.strip_prefix("config: ") {
                header.config.push(c.to_string());
                continue;
            }
            let Some((key, val)) = rest.split_once(" = ") else { continue };
            let num = |v: &str| v.parse::<f64>().map_err(|e| perr(lineno, format!("{key}: {e}")));
            match key {
                "n" => n = Some(val.parse::<usize>().map_err(|e| perr(lineno, e.to_string()))?),
                "h" => h = Some(num(val)?),
                "origin_index" => {
                    origin = Some(
                        val.split_whitespace()
                            .map(|t| t.parse::<i64>().map_err(|e| perr(lineno, e.to_string())))
                            .collect::<Result<Vec<_>>>()?,
                    )
                }
                "extents" => {
                    extents = Some(
                        val.split_whitespace()
                            .map(|t| t.parse::<usize>().map_err(|e| perr(lineno, e.to_string())))
                            .collect::<Result<Vec<_>>>()?,
                    )
                }
                "reach_cells" => reach_cells = val.parse().map_err(|e: std::num::ParseIntError| perr(lineno, e.to_string()))?,
                "domain" => header.domain = val.to_string(),
                "directions" => header.directions = val.to_string(),
                "tol" => header.tol = num(val)?,
                "iterations" => {
                    header.iterations = val.parse().map_err(|e: std::num::ParseIntError| perr(lineno, e.to_string()))?
                }
                "metadata" => metadata = val.to_string(),
                _ => {}
            }
            continue;
        }
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() < 3 {
            return Err(perr(lineno, "row has too few columns".into()));
        }
        let tag = match parts[parts.len() - 1] {
            "I" => NodeClass::Interior,
            "B" => NodeClass::Band,
            t => return Err(perr(lineno, format!("unknown node tag {t:?}"))),
        };
        let value = parts[parts.len() - 2]
            .parse::<f64>()
            .map_err(|e| perr(lineno, e.to_string()))?;
        let coords = parts[..parts.len() - 2]
            .iter()
            .map(|t| t.parse::<f64>().map_err(|e| perr(lineno, e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        rows.push((coords, value, tag, lineno));
    }
    let missing = |k: &str| Error::Parse { line: 0, msg: format!("missing header `{k}`") };
    let n = n.ok_or_else(|| missing("n"))?;
    let h = h.ok_or_else(|| missing("h"))?;
    let origin = origin.ok_or_else(|| missing("origin_index"))?;
    let extents = extents.ok_or_else(|| missing("extents"))?;
    if origin.len() != 2 * n || extents.len() != 2 * n {
        return Err(Error::Parse { line: 0, msg: "header dimensions disagree with n".into() });
    }
    let total: usize = extents.iter().product();
    let mut class = vec![NodeClass::Exterior; total];
    let mut values = vec![f64::NAN; total];
    let strides = strides_of(&extents);
    for (coords, value, tag, lineno) in rows {
        if coords.len() != 2 * n {
            return Err(perr(lineno, format!("expected {} coordinates", 2 * n)));
        }
        let mut lin = 0usize;
        for d in 0..2 * n {
            let k = (coords[d] / h).round() as i64 - origin[d];
            if k < 0 || k as usize >= extents[d] {
                return Err(perr(lineno, "node outside the declared extents".into()));
            }
            lin += k as usize * strides[d];
        }
        class[lin] = tag;
        values[lin] = value;
    }
    let grid = Arc::new(Grid::from_parts(n, h, origin, extents, class, reach_cells));
    Ok((ScalarField { grid, values, metadata }, header))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{make_domain, DomainKind};

    fn ball(n: usize) -> DomainSpec {
        make_domain(DomainKind::Ball { center: vec![0.0; 2 * n], radius: 1.0 }, n).unwrap()
    }

    #[test]
    fn disc_grid_is_seven_by_seven() {
        let opts = GridOptions { reach_cells: 1, ..Default::default() };
        let g = build_grid(&ball(1), 0.5, 0.5, &opts).unwrap();
        assert_eq!(g.extents, vec![7, 7]);
        let center = g.node_at_global(&[0, 0]).unwrap();
        assert_eq!(g.class[center], NodeClass::Interior);
    }

    #[test]
    fn ball_classification_matches_rho() {
        let d = ball(2);
        let g = build_grid(&d, 0.25, 1.0, &GridOptions::default()).unwrap();
        for i in 0..g.len() {
            let x = g.coords(i);
            let r2: f64 = x.iter().map(|v| v * v).sum();
            assert_eq!(g.class[i] == NodeClass::Interior, r2 < 1.0);
        }
    }

    #[test]
    fn l1_ball_node_is_interior() {
        let d = make_domain(DomainKind::L1Ball { scale: 1.0 }, 2).unwrap();
        let g = build_grid(&d, 0.25, 1.0, &GridOptions::default()).unwrap();
        // 0.9 is not a multiple of 0.25, so check rho at the node directly
        assert!(d.rho(&[0.9, 0.0, 0.0, 0.0]) < 0.0);
        let i = g.node_at_global(&[3, 0, 0, 0]).unwrap();
        assert_eq!(g.class[i], NodeClass::Interior);
    }

    #[test]
    fn band_lies_within_reach() {
        let d = ball(1);
        let opts = GridOptions { reach_cells: 2, ..Default::default() };
        let g = build_grid(&d, 0.1, 0.5, &opts).unwrap();
        for &b in &g.band {
            let xb = g.coords(b);
            let close = g.interior.iter().any(|&i| {
                let xi = g.coords(i);
                xi.iter().zip(&xb).all(|(a, c)| ((a - c) / 0.1).abs().round() <= 2.0)
            });
            assert!(close);
        }
    }

    #[test]
    fn budget_and_margin_errors() {
        let d = ball(2);
        let small = GridOptions { node_budget: 100, ..Default::default() };
        assert!(matches!(build_grid(&d, 0.1, 0.5, &small), Err(Error::Resource { .. })));
        assert!(matches!(build_grid(&d, 0.1, 0.0, &GridOptions::default()), Err(Error::Input(_))));
    }

    #[test]
    fn refinement_keeps_interior_nodes() {
        let d = make_domain(DomainKind::L1Ball { scale: 1.0 }, 1).unwrap();
        let coarse = build_grid(&d, 0.2, 1.0, &GridOptions::default()).unwrap();
        let fine = build_grid(&d, 0.1, 1.0, &GridOptions::default()).unwrap();
        for &i in &coarse.interior {
            let xc = coarse.coords(i);
            let global: Vec<i64> = (0..2)
                .map(|k| 2 * (coarse.origin_index[k] + ((i / coarse.strides[k]) % coarse.extents[k]) as i64))
                .collect();
            let j = fine.node_at_global(&global).unwrap();
            assert_eq!(fine.coords(j), xc);
            assert_eq!(fine.class[j], NodeClass::Interior);
        }
    }

    #[test]
    fn interpolation_is_exact_on_affine() {
        let d = ball(1);
        let g = Arc::new(build_grid(&d, 0.1, 0.5, &GridOptions::default()).unwrap());
        let f = ScalarField::from_fn(g, "affine", |x| 2.0 * x[0] - x[1] + 0.5);
        let v = f.interpolate(&[0.123, -0.456]).unwrap();
        assert!((v - (2.0 * 0.123 + 0.456 + 0.5)).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let d = ball(1);
        let g = Arc::new(build_grid(&d, 0.1, 0.5, &GridOptions::default()).unwrap());
        let f = ScalarField::from_fn(g, "trig", |x| (3.0 * x[0]).sin() / 7.0 + x[1].exp());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        let header = FieldHeader { domain: "ball".into(), tol: 1e-8, iterations: 3, ..Default::default() };
        write_field(&path, &f, &header).unwrap();
        let (back, h2) = read_field(&path).unwrap();
        assert!(back.grid.same_layout(&f.grid));
        assert_eq!(h2.iterations, 3);
        for i in 0..f.values.len() {
            assert_eq!(f.values[i].to_bits(), back.values[i].to_bits());
        }
    }
}
