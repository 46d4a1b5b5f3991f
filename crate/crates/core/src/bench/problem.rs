use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::fem::{DofMap, Edge, StructuredMesh};
use crate::filter::HelmholtzFilter;
use crate::hdm::{ElasticityProblem, MaterialModel};
use crate::Error;

use super::config::ModelConfig;

/// Homogeneous Dirichlet condition on whole edges or single nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Support {
    Edge { edge: EdgeName, fix_x: bool, fix_y: bool },
    /// Node at grid position `(i, j)`.
    Node { i: usize, j: usize, fix_x: bool, fix_y: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeName {
    Left,
    Right,
    Bottom,
    Top,
}

impl From<EdgeName> for Edge {
    fn from(e: EdgeName) -> Self {
        match e {
            EdgeName::Left => Edge::Left,
            EdgeName::Right => Edge::Right,
            EdgeName::Bottom => Edge::Bottom,
            EdgeName::Top => Edge::Top,
        }
    }
}

/// Uniform traction of `magnitude` (force per length) in direction
/// `(dir_x, dir_y)` over `[start, end]` along an edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadSegment {
    pub edge: EdgeName,
    pub start: f64,
    pub end: f64,
    pub magnitude: f64,
    pub dir_x: f64,
    pub dir_y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub name: String,
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    /// Characteristic filter radius `R`.
    pub filter_radius: f64,
    /// `V / |Omega|`.
    pub volume_fraction: f64,
    /// Uniform initial design value.
    pub psi0: f64,
    pub supports: Vec<Support>,
    pub loads: Vec<LoadSegment>,
}

pub const BUILTIN_PROBLEMS: [&str; 4] = ["mbb", "cantilever", "ssbeam", "mbb-small"];

/// Built-in benchmark by name.
pub fn builtin_problem(name: &str) -> Result<ProblemSpec, Error> {
    let down = |edge, start, end| LoadSegment {
        edge,
        start,
        end,
        magnitude: 1.0,
        dir_x: 0.0,
        dir_y: -1.0,
    };
    let mbb = |nx: usize, ny: usize| ProblemSpec {
        name: if nx == 180 { "mbb".into() } else { "mbb-small".into() },
        nx,
        ny,
        h: 1.0 / ny as f64,
        filter_radius: 0.12,
        volume_fraction: 0.5,
        psi0: 0.5,
        supports: vec![
            Support::Edge { edge: EdgeName::Left, fix_x: true, fix_y: false },
            Support::Node { i: nx, j: 0, fix_x: false, fix_y: true },
        ],
        loads: vec![down(EdgeName::Top, 0.0, 0.3)],
    };
    match name {
        "mbb" => Ok(mbb(180, 60)),
        "mbb-small" => Ok(mbb(60, 20)),
        "cantilever" => Ok(ProblemSpec {
            name: name.into(),
            nx: 160,
            ny: 100,
            h: 1.0,
            filter_radius: 2.0,
            volume_fraction: 0.5,
            psi0: 0.5,
            supports: vec![Support::Edge { edge: EdgeName::Left, fix_x: true, fix_y: true }],
            loads: vec![down(EdgeName::Right, 0.0, 3.0)],
        }),
        "ssbeam" => Ok(ProblemSpec {
            name: name.into(),
            nx: 180,
            ny: 90,
            h: 1.0,
            filter_radius: 0.5,
            volume_fraction: 0.4,
            psi0: 0.4,
            supports: vec![
                Support::Node { i: 0, j: 0, fix_x: true, fix_y: true },
                Support::Node { i: 180, j: 0, fix_x: false, fix_y: true },
            ],
            loads: vec![down(EdgeName::Bottom, 88.5, 91.5)],
        }),
        other => Err(Error::InvalidInput(format!(
            "unknown problem '{other}', available: {}",
            BUILTIN_PROBLEMS.join(", ")
        ))),
    }
}

impl ProblemSpec {
    pub fn mesh(&self) -> Result<StructuredMesh, Error> {
        Ok(StructuredMesh::new(self.nx, self.ny, self.h)?)
    }

    pub fn initial_design(&self) -> Vec<f64> {
        vec![self.psi0; self.nx * self.ny]
    }

    pub fn validate(&self) -> Result<(), Error> {
        let mesh = self.mesh()?;
        if !(self.volume_fraction > 0.0 && self.volume_fraction <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "volume fraction must lie in (0, 1], got {}",
                self.volume_fraction
            )));
        }
        if !(0.0..=1.0).contains(&self.psi0) || self.psi0 > self.volume_fraction + 1e-12 {
            return Err(Error::InvalidInput(format!(
                "initial design {} must be feasible for volume fraction {}",
                self.psi0, self.volume_fraction
            )));
        }
        for s in &self.supports {
            if let Support::Node { i, j, .. } = s {
                if *i > self.nx || *j > self.ny {
                    return Err(Error::InvalidInput(format!("support node ({i}, {j}) outside the mesh")));
                }
            }
        }
        for l in &self.loads {
            let len = match l.edge {
                EdgeName::Left | EdgeName::Right => mesh.height(),
                EdgeName::Bottom | EdgeName::Top => mesh.width(),
            };
            if !(l.start >= -1e-12 && l.end <= len + 1e-12 && l.start < l.end) {
                return Err(Error::InvalidInput(format!(
                    "load segment [{}, {}] outside edge of length {len}",
                    l.start, l.end
                )));
            }
        }
        Ok(())
    }

    pub fn fixed_dofs(&self, mesh: &StructuredMesh) -> Vec<usize> {
        let mut fixed = Vec::new();
        let mut push = |n: usize, fx: bool, fy: bool| {
            if fx {
                fixed.push(2 * n);
            }
            if fy {
                fixed.push(2 * n + 1);
            }
        };
        for s in &self.supports {
            match s {
                Support::Edge { edge, fix_x, fix_y } => {
                    for n in mesh.edge_nodes((*edge).into()) {
                        push(n, *fix_x, *fix_y);
                    }
                }
                Support::Node { i, j, fix_x, fix_y } => push(mesh.node(*i, *j), *fix_x, *fix_y),
            }
        }
        fixed.sort_unstable();
        fixed.dedup();
        fixed
    }

    /// Consistent nodal loads on the full dof vector: the traction is
    /// integrated exactly against the linear edge shape functions.
    pub fn load_vector(&self, mesh: &StructuredMesh) -> Vec<f64> {
        let mut f = vec![0.0; 2 * mesh.node_count()];
        let h = mesh.h();
        for l in &self.loads {
            let nodes = mesh.edge_nodes(l.edge.into());
            for pair in nodes.windows(2) {
                let s0 = mesh.edge_coordinate(l.edge.into(), pair[0]);
                let s1 = s0 + h;
                let a = l.start.max(s0);
                let b = l.end.min(s1);
                if b <= a {
                    continue;
                }
                // Integrals of (s1 - s)/h and (s - s0)/h over [a, b].
                let w0 = ((s1 - a).powi(2) - (s1 - b).powi(2)) / (2.0 * h);
                let w1 = ((b - s0).powi(2) - (a - s0).powi(2)) / (2.0 * h);
                for (n, w) in [(pair[0], w0), (pair[1], w1)] {
                    f[2 * n] += l.magnitude * l.dir_x * w;
                    f[2 * n + 1] += l.magnitude * l.dir_y * w;
                }
            }
        }
        f
    }

    /// Discrete problem with the given material constants and filter
    /// convention.
    pub fn build(&self, model: &ModelConfig) -> Result<ElasticityProblem, Error> {
        self.validate()?;
        let mesh = self.mesh()?;
        let dofs = DofMap::new(2 * mesh.node_count(), self.fixed_dofs(&mesh));
        let load = dofs.restrict(&self.load_vector(&mesh));
        let filter = HelmholtzFilter::new(&mesh, self.filter_radius, model.filter_length_factor)?;
        let volume = self.volume_fraction * mesh.area();
        Ok(ElasticityProblem {
            material: MaterialModel {
                rho_min: model.rho_min,
                penal: model.penal,
            },
            youngs_modulus: model.youngs_modulus,
            poisson_ratio: model.poisson_ratio,
            dofs,
            load,
            filter: Arc::new(filter),
            volume,
            mesh,
        })
    }

    /// One-line description of the geometry assumptions for report headers.
    pub fn describe(&self) -> String {
        let supports: Vec<String> = self
            .supports
            .iter()
            .map(|s| match s {
                Support::Edge { edge, fix_x, fix_y } => format!("{edge:?} edge{}", fix_label(*fix_x, *fix_y)),
                Support::Node { i, j, fix_x, fix_y } => format!("node ({i},{j}){}", fix_label(*fix_x, *fix_y)),
            })
            .collect();
        let loads: Vec<String> = self
            .loads
            .iter()
            .map(|l| format!("q={} on {:?} [{}, {}]", l.magnitude, l.edge, l.start, l.end))
            .collect();
        format!(
            "{}: {}x{} elements, h={}, domain {}x{}, R={}, V={}|Omega|, psi0={}, supports: {}; loads: {}",
            self.name,
            self.nx,
            self.ny,
            self.h,
            self.nx as f64 * self.h,
            self.ny as f64 * self.h,
            self.filter_radius,
            self.volume_fraction,
            self.psi0,
            supports.join(", "),
            loads.join(", ")
        )
    }
}

fn fix_label(x: bool, y: bool) -> &'static str {
    match (x, y) {
        (true, true) => " ux=uy=0",
        (true, false) => " ux=0",
        (false, true) => " uy=0",
        (false, false) => "",
    }
}
