//! Overlapping decompositions of a structured mesh.
//!
//! For each subdomain `Ω_j` the layout records, as sorted element or dof
//! index arrays:
//!
//! - the overlap zone `Ω°_j`: elements of `Ω_j` that also belong to some
//!   other subdomain,
//! - the core `ω°_j = Ω_j \ Ω°_j` and the interface `Γ°_j` (dofs shared by
//!   core and overlap elements),
//! - the strip `Ω*_j`: `Ω°_j` grown by `s` element layers into the core, its
//!   complement `ω*_j` and the interface `Γ*_j` between them,
//! - the partition of unity `ξ_j` on the dofs of `Ω_j` and the modified
//!   weights `η_j` on the dofs of `Ω*_j`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{element_set_dofs, StructuredMesh};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EtaRamp {
    /// `η = (s - d) / s` at element-layer distance `d` from `Γ°_j`.
    Linear,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Subdomain {
    pub index: usize,
    /// Half-open element ranges `[x0, x1) × [y0, y1)` of the rectangle `Ω_j`.
    pub element_box: [usize; 4],
    pub elements: Vec<usize>,
    pub dofs: Vec<usize>,
    /// Dofs whose every neighboring element lies in `Ω_j`.
    pub interior_dofs: Vec<usize>,
    pub overlap_elements: Vec<usize>,
    /// Dofs of the closure of `Ω°_j`.
    pub overlap_dofs: Vec<usize>,
    pub core_elements: Vec<usize>,
    pub core_dofs: Vec<usize>,
    pub star_elements: Vec<usize>,
    pub star_dofs: Vec<usize>,
    pub gamma_circ: Vec<usize>,
    pub gamma_star: Vec<usize>,
    /// `ξ_j` aligned with `dofs`.
    pub xi: Vec<f64>,
    /// `η_j` aligned with `star_dofs`.
    pub eta: Vec<f64>,
}

impl Subdomain {
    pub fn contains_element(&self, mesh: &StructuredMesh, e: usize) -> bool {
        let (ex, ey) = mesh.element_position(e);
        let [x0, x1, y0, y1] = self.element_box;
        ex >= x0 && ex < x1 && ey >= y0 && ey < y1
    }

    pub fn xi_at(&self, dof: usize) -> f64 {
        match self.dofs.binary_search(&dof) {
            Ok(k) => self.xi[k],
            Err(_) => 0.0,
        }
    }

    pub fn is_floating(&self, is_dirichlet: &[bool]) -> bool {
        !self.dofs.iter().any(|&d| is_dirichlet[d])
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SubdomainLayout {
    pub mesh: StructuredMesh,
    pub px: usize,
    pub py: usize,
    pub overlap_layers: usize,
    pub star_layers: usize,
    /// Element-layer distance between `Γ*_j` and `Γ°_j`.
    pub delta_layers: usize,
    pub eta_ramp: EtaRamp,
    pub k0: usize,
    pub subdomains: Vec<Subdomain>,
}

impl SubdomainLayout {
    pub fn len(&self) -> usize {
        self.subdomains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subdomains.is_empty()
    }

    /// Number of subdomains containing each element.
    pub fn membership_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.mesh.n_elements()];
        for s in &self.subdomains {
            for &e in &s.elements {
                counts[e] += 1;
            }
        }
        counts
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("layout serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::parse("layout json", e.to_string()))
    }
}

fn subtract_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    a.iter()
        .copied()
        .filter(|x| b.binary_search(x).is_err())
        .collect()
}

fn intersect_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    a.iter()
        .copied()
        .filter(|x| b.binary_search(x).is_ok())
        .collect()
}

/// Regular `px × py` block partition, each block grown by `overlap_layers`
/// element layers, with strips of `star_layers` layers.
pub fn build_partition(
    mesh: &StructuredMesh,
    px: usize,
    py: usize,
    overlap_layers: usize,
    star_layers: usize,
) -> Result<SubdomainLayout> {
    if px == 0 || py == 0 {
        return Err(Error::InvalidInput(
            "need at least one subdomain per axis".into(),
        ));
    }
    if !mesh.nx.is_multiple_of(px) || !mesh.ny.is_multiple_of(py) {
        return Err(Error::InvalidInput(format!(
            "{}x{} mesh is not divisible into {px}x{py} blocks",
            mesh.nx, mesh.ny
        )));
    }
    if overlap_layers == 0 || star_layers == 0 {
        return Err(Error::InvalidInput(
            "overlap and strip layer counts must be at least 1".into(),
        ));
    }
    let (sx, sy) = (mesh.nx / px, mesh.ny / py);

    let mut boxes = Vec::with_capacity(px * py);
    for by in 0..py {
        for bx in 0..px {
            boxes.push([
                (bx * sx).saturating_sub(overlap_layers),
                ((bx + 1) * sx + overlap_layers).min(mesh.nx),
                (by * sy).saturating_sub(overlap_layers),
                ((by + 1) * sy + overlap_layers).min(mesh.ny),
            ]);
        }
    }

    let mut counts = vec![0usize; mesh.n_elements()];
    for b in &boxes {
        for ey in b[2]..b[3] {
            for ex in b[0]..b[1] {
                counts[mesh.element(ex, ey)] += 1;
            }
        }
    }

    let mut subdomains = Vec::with_capacity(boxes.len());
    for (j, b) in boxes.iter().enumerate() {
        let mut elements = Vec::new();
        for ey in b[2]..b[3] {
            for ex in b[0]..b[1] {
                elements.push(mesh.element(ex, ey));
            }
        }
        elements.sort_unstable();
        let dofs = element_set_dofs(mesh, &elements);
        let in_box = |e: usize| {
            let (ex, ey) = mesh.element_position(e);
            ex >= b[0] && ex < b[1] && ey >= b[2] && ey < b[3]
        };
        let interior_dofs: Vec<usize> = dofs
            .iter()
            .copied()
            .filter(|&d| mesh.dof_elements(d).all(in_box))
            .collect();

        let (overlap_elements, core_elements): (Vec<usize>, Vec<usize>) =
            elements.iter().partition(|&&e| counts[e] >= 2);
        if core_elements.is_empty() {
            return Err(Error::DegenerateGeometry(format!(
                "subdomain {j}: overlap covers the whole subdomain (no core elements)"
            )));
        }
        let overlap_dofs = element_set_dofs(mesh, &overlap_elements);
        let core_dofs = element_set_dofs(mesh, &core_elements);
        let gamma_circ = intersect_sorted(&core_dofs, &overlap_dofs);

        let (star_elements, star_dofs, gamma_star, layer) = if overlap_elements.is_empty() {
            (Vec::new(), Vec::new(), Vec::new(), Vec::new())
        } else {
            grow_strip(
                mesh,
                &overlap_elements,
                &core_elements,
                &overlap_dofs,
                star_layers,
            )
        };

        subdomains.push(Subdomain {
            index: j,
            element_box: *b,
            elements,
            dofs,
            interior_dofs,
            overlap_elements,
            overlap_dofs,
            core_elements,
            core_dofs,
            star_elements,
            star_dofs,
            gamma_circ,
            gamma_star,
            xi: Vec::new(),
            eta: layer.into_iter().map(|d| d as f64).collect(),
        });
    }

    let mut layout = SubdomainLayout {
        mesh: *mesh,
        px,
        py,
        overlap_layers,
        star_layers,
        delta_layers: star_layers,
        eta_ramp: EtaRamp::Linear,
        k0: 0,
        subdomains,
    };
    layout.k0 = compute_k0(&layout);
    let xi = build_pou(&layout)?;
    for (s, w) in layout.subdomains.iter_mut().zip(xi) {
        s.xi = w;
    }
    // eta temporarily holds layer distances, see grow_strip
    let eta = build_eta_from_layers(&layout);
    for (s, w) in layout.subdomains.iter_mut().zip(eta) {
        s.eta = w;
    }
    Ok(layout)
}

/// Grows the overlap zone by `layers` element layers into the core.
/// Returns the strip elements, strip dofs, `Γ*`, and for each strip dof its
/// layer distance from the closure of the overlap zone (0 on it).
/// A strip may swallow the whole core, leaving `Γ*_j` empty.
fn grow_strip(
    mesh: &StructuredMesh,
    overlap_elements: &[usize],
    core_elements: &[usize],
    overlap_dofs: &[usize],
    layers: usize,
) -> (Vec<usize>, Vec<usize>, Vec<usize>, Vec<usize>) {
    let mut in_star = vec![false; mesh.n_elements()];
    for &e in overlap_elements {
        in_star[e] = true;
    }
    let mut dof_layer: Vec<(usize, usize)> = overlap_dofs.iter().map(|&d| (d, 0)).collect();
    let mut reached = vec![false; mesh.n_dofs()];
    for &d in overlap_dofs {
        reached[d] = true;
    }
    let mut remaining: Vec<usize> = core_elements.to_vec();
    for layer in 1..=layers {
        let (added, rest): (Vec<usize>, Vec<usize>) = remaining
            .iter()
            .partition(|&&e| mesh.element_dofs(e).iter().any(|&d| reached[d]));
        for &e in &added {
            in_star[e] = true;
        }
        for &e in &added {
            for d in mesh.element_dofs(e) {
                if !reached[d] {
                    reached[d] = true;
                    dof_layer.push((d, layer));
                }
            }
        }
        remaining = rest;
    }
    let mut star_elements: Vec<usize> = overlap_elements
        .iter()
        .chain(core_elements.iter())
        .copied()
        .filter(|&e| in_star[e])
        .collect();
    star_elements.sort_unstable();
    dof_layer.sort_unstable();
    let star_dofs: Vec<usize> = dof_layer.iter().map(|&(d, _)| d).collect();
    let layer: Vec<usize> = dof_layer.iter().map(|&(_, l)| l).collect();
    let outer_dofs = element_set_dofs(mesh, &remaining);
    let gamma_star = intersect_sorted(&star_dofs, &outer_dofs);
    (star_elements, star_dofs, gamma_star, layer)
}

/// Maximum number of subdomains any element belongs to.
pub fn compute_k0(layout: &SubdomainLayout) -> usize {
    layout.membership_counts().into_iter().max().unwrap_or(0)
}

/// `ξ_j(x) = μ_j(x) / Σ_k μ_k(x)` with `μ_j(x) = 1` on interior dofs of
/// `Ω_j`. Returns one weight vector per subdomain, aligned with its `dofs`.
pub fn build_pou(layout: &SubdomainLayout) -> Result<Vec<Vec<f64>>> {
    let mesh = &layout.mesh;
    let mut multiplicity = vec![0usize; mesh.n_dofs()];
    for s in &layout.subdomains {
        for &d in &s.interior_dofs {
            multiplicity[d] += 1;
        }
    }
    if let Some(d) = multiplicity.iter().position(|&m| m == 0) {
        return Err(Error::DegenerateGeometry(format!(
            "dof {d} is interior to no subdomain"
        )));
    }
    Ok(layout
        .subdomains
        .iter()
        .map(|s| {
            s.dofs
                .iter()
                .map(|&d| {
                    if s.interior_dofs.binary_search(&d).is_ok() {
                        1.0 / multiplicity[d] as f64
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect())
}

fn build_eta_from_layers(layout: &SubdomainLayout) -> Vec<Vec<f64>> {
    let s_layers = layout.star_layers as f64;
    layout
        .subdomains
        .iter()
        .map(|s| {
            s.star_dofs
                .iter()
                .zip(&s.eta)
                .map(|(&d, &layer)| {
                    if s.gamma_star.binary_search(&d).is_ok() {
                        0.0
                    } else if layer == 0.0 {
                        s.xi_at(d)
                    } else {
                        (s_layers - layer) / s_layers
                    }
                })
                .collect()
        })
        .collect()
}

/// `η_j` on the strip dofs of every subdomain, recomputed from the layout's
/// sets: `ξ_j` on the closure of `Ω°_j`, zero on `Γ*_j`, and a linear ramp in
/// element-layer distance in between.
pub fn build_eta(layout: &SubdomainLayout) -> Result<Vec<Vec<f64>>> {
    let mesh = &layout.mesh;
    let s_layers = layout.star_layers as f64;
    let mut out = Vec::with_capacity(layout.len());
    for s in &layout.subdomains {
        if s.overlap_elements.is_empty() {
            return Err(Error::DegenerateGeometry(format!(
                "subdomain {}: empty overlap zone, no strip",
                s.index
            )));
        }
        // breadth-first layer distance from the overlap closure over strip elements
        let strip_core: Vec<usize> = subtract_sorted(&s.star_elements, &s.overlap_elements);
        let mut dist = vec![usize::MAX; mesh.n_dofs()];
        for &d in &s.overlap_dofs {
            dist[d] = 0;
        }
        let mut remaining = strip_core;
        let mut layer = 0;
        while !remaining.is_empty() {
            layer += 1;
            let (now, rest): (Vec<usize>, Vec<usize>) = remaining.iter().partition(|&&e| {
                mesh.element_dofs(e)
                    .iter()
                    .any(|&d| dist[d] != usize::MAX && dist[d] < layer)
            });
            if now.is_empty() {
                break;
            }
            for &e in &now {
                for d in mesh.element_dofs(e) {
                    if dist[d] == usize::MAX {
                        dist[d] = layer;
                    }
                }
            }
            remaining = rest;
        }
        out.push(
            s.star_dofs
                .iter()
                .map(|&d| {
                    if s.gamma_star.binary_search(&d).is_ok() {
                        0.0
                    } else if dist[d] == 0 {
                        s.xi_at(d)
                    } else {
                        (s_layers - dist[d] as f64) / s_layers
                    }
                })
                .collect(),
        );
    }
    Ok(out)
}
