//! Time-stamped particle positions with an event log and run metadata.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::kernels::MollifierFamily;
use crate::{Error, PeakonEnsemble, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Regularized,
    Sticky,
    DispersiveLimit,
    /// Ordered velocities applied after relabelling by position.
    Crossing,
    /// Ordered velocities applied in label order even after the particles pass each other.
    Unreordered,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Regularized => "regularized",
            Method::Sticky => "sticky",
            Method::DispersiveLimit => "dispersive_limit",
            Method::Crossing => "crossing",
            Method::Unreordered => "unreordered",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Merge,
    Split,
}

/// A merge or split. Indices are zero-based particle labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    /// Every particle in the cluster involved.
    pub indices: Vec<usize>,
    /// The left and right blocks that joined or separated.
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    /// Split events: `v_B − v_A` at the last accepted state before the event and at the event.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub probe_before: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub probe_at: Option<f64>,
}

/// How time was discretized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepControl {
    pub scheme: String,
    pub dt: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rtol: Option<f64>,
    pub steps: usize,
    pub rejected: usize,
    pub store_every: usize,
    /// Largest particle speed evaluated during the run.
    pub max_speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mollifier: Option<MollifierFamily>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub quad_nodes: Option<usize>,
    pub amplitudes: Vec<f64>,
    pub step: StepControl,
    /// Set when the split rule ran on ensembles it was not derived for (N ≥ 4).
    #[serde(default)]
    pub experimental_split_rule: bool,
    #[serde(default)]
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub positions: Vec<Vec<f64>>,
    /// Adjacent gaps carried exactly by the integrator, when it has them.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gaps: Option<Vec<Vec<f64>>>,
    pub events: Vec<Event>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn n(&self) -> usize {
        self.meta.amplitudes.len()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.meta.amplitudes
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().expect("nonempty trajectory")
    }

    pub fn final_positions(&self) -> &[f64] {
        self.positions.last().expect("nonempty trajectory")
    }

    /// Positions at `t`, linearly interpolated between stored samples.
    pub fn positions_at(&self, t: f64) -> Result<Vec<f64>> {
        let (t0, t1) = (self.times[0], self.t_end());
        if t < t0 - 1e-12 || t > t1 + 1e-12 {
            return Err(Error::invalid(format!("t = {t} outside [{t0}, {t1}]")));
        }
        let k = self.times.partition_point(|s| *s < t);
        if k < self.times.len() && self.times[k] == t {
            return Ok(self.positions[k].clone());
        }
        if k == 0 {
            return Ok(self.positions[0].clone());
        }
        if k == self.times.len() {
            return Ok(self.final_positions().to_vec());
        }
        let (ta, tb) = (self.times[k - 1], self.times[k]);
        let w = (t - ta) / (tb - ta);
        Ok(self.positions[k - 1]
            .iter()
            .zip(&self.positions[k])
            .map(|(a, b)| a + w * (b - a))
            .collect())
    }

    pub fn ensemble_at(&self, t: f64) -> Result<PeakonEnsemble> {
        PeakonEnsemble::new(self.meta.amplitudes.clone(), self.positions_at(t)?)
    }

    /// Smallest adjacent gap over all stored times (exact gaps when carried).
    pub fn min_gap(&self) -> f64 {
        match &self.gaps {
            Some(g) => g.iter().flatten().copied().fold(f64::INFINITY, f64::min),
            None => self
                .positions
                .iter()
                .flat_map(|x| x.windows(2).map(|w| w[1] - w[0]))
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// `max |x_i(t_{k+1}) − x_i(t_k)| / (t_{k+1} − t_k)` over stored samples.
    pub fn max_sample_speed(&self) -> f64 {
        let mut m = 0.0f64;
        for k in 1..self.times.len() {
            let dt = self.times[k] - self.times[k - 1];
            for (a, b) in self.positions[k - 1].iter().zip(&self.positions[k]) {
                m = m.max((b - a).abs() / dt);
            }
        }
        m
    }

    /// Number of distinct positions at stored sample `k`.
    pub fn cluster_count(&self, k: usize) -> usize {
        let x = &self.positions[k];
        1 + x.windows(2).filter(|w| w[1] != w[0]).count()
    }

    /// `sup_t max_i |x_i − y_i|` at this trajectory's stored times, with `other` interpolated.
    pub fn sup_distance(&self, other: &Trajectory) -> Result<f64> {
        let mut d = 0.0f64;
        for (t, x) in self.times.iter().zip(&self.positions) {
            if *t > other.t_end() + 1e-12 {
                break;
            }
            let y = other.positions_at(*t)?;
            for (a, b) in x.iter().zip(&y) {
                d = d.max((a - b).abs());
            }
        }
        Ok(d)
    }

    /// CSV with header `t,x1,...,xN`, numbers in shortest round-trip form.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t");
        for i in 1..=self.n() {
            let _ = write!(s, ",x{i}");
        }
        s.push('\n');
        for (t, x) in self.times.iter().zip(&self.positions) {
            let _ = write!(s, "{t:?}");
            for v in x {
                let _ = write!(s, ",{v:?}");
            }
            s.push('\n');
        }
        s
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn events_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.events)?)
    }
}

/// Parses a trajectory CSV back into `(times, positions)`.
pub fn read_csv(path: impl AsRef<Path>) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut times = Vec::new();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| Error::invalid(format!("bad number `{f}`: {e}"))))
            .collect::<Result<_>>()?;
        times.push(vals[0]);
        rows.push(vals[1..].to_vec());
    }
    Ok((times, rows))
}
