use serde::{Serialize, Serializer};

use super::fmt;
use crate::envs::{EnvSpec, Orientation};
use crate::error::{Error, Result};
use crate::model::{encode, NidModel};

/// Ground-truth role of an (object, position) pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Cluster {
    /// Objects that never roll.
    C1,
    /// Rollable objects on the left plane.
    C2,
    /// Rollable objects on the right plane.
    C3,
}

impl Cluster {
    pub fn index(self) -> usize {
        self as usize
    }
}

/// Labels for every non-agent (o, p), in object-major order.
pub fn cluster_labels(env: &EnvSpec) -> Result<Vec<((usize, usize), Cluster)>> {
    if env.orientation == Orientation::Flat {
        return Err(Error::contract("cluster labels need a sloped environment"));
    }
    let mut out = Vec::new();
    for (o, obj) in env.objects.iter().enumerate() {
        if obj.is_agent {
            continue;
        }
        for p in 0..env.positions {
            let c = match (obj.rollable, p < env.apex) {
                (false, _) => Cluster::C1,
                (true, true) => Cluster::C2,
                (true, false) => Cluster::C3,
            };
            out.push(((o, p), c));
        }
    }
    Ok(out)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Mean silhouette with Euclidean distance. Points in singleton clusters,
/// and points with a(i) = b(i) = 0, score 0.
pub fn silhouette(points: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    if points.len() != labels.len() {
        return Err(Error::shape("silhouette", &[points.len()], &[labels.len()]));
    }
    let mut ids: Vec<usize> = labels.to_vec();
    ids.sort_unstable();
    ids.dedup();
    if ids.len() < 2 {
        return Err(Error::contract("silhouette needs at least two distinct labels"));
    }
    let slot = |l: usize| ids.binary_search(&l).expect("label listed");
    let sizes = labels.iter().fold(vec![0usize; ids.len()], |mut acc, &l| {
        acc[slot(l)] += 1;
        acc
    });
    let mut total = 0.0;
    let mut sums = vec![0.0; ids.len()];
    for (i, pi) in points.iter().enumerate() {
        let own = slot(labels[i]);
        if sizes[own] == 1 {
            continue;
        }
        sums.iter_mut().for_each(|s| *s = 0.0);
        for (j, pj) in points.iter().enumerate() {
            if i != j {
                sums[slot(labels[j])] += dist(pi, pj);
            }
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..ids.len())
            .filter(|&c| c != own)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let m = a.max(b);
        if m > 0.0 {
            total += (b - a) / m;
        }
    }
    Ok(total / points.len() as f64)
}

fn points_17<S: Serializer>(pts: &[Vec<f64>], s: S) -> std::result::Result<S::Ok, S::Error> {
    #[derive(Serialize)]
    struct P<'a>(#[serde(serialize_with = "fmt::vec::serialize")] &'a [f64]);
    s.collect_seq(pts.iter().map(|p| P(p)))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmbeddingReport {
    /// (object, position) of each point.
    pub pairs: Vec<(usize, usize)>,
    /// Encoder bottleneck h for each pair.
    #[serde(serialize_with = "points_17")]
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<Cluster>,
    #[serde(serialize_with = "fmt::serialize")]
    pub silhouette: f64,
}

pub fn embedding_report(model: &NidModel, env: &EnvSpec) -> Result<EmbeddingReport> {
    if model.n_objects != env.n_objects() || model.n_positions != env.positions {
        return Err(Error::contract("model was not built for this environment"));
    }
    let labelled = cluster_labels(env)?;
    let mut pairs = Vec::with_capacity(labelled.len());
    let mut points = Vec::with_capacity(labelled.len());
    let mut labels = Vec::with_capacity(labelled.len());
    for ((o, p), c) in labelled {
        points.push(encode(&model.encoder, model.n_objects, o, p)?.h);
        pairs.push((o, p));
        labels.push(c);
    }
    let idx: Vec<usize> = labels.iter().map(|c| c.index()).collect();
    let silhouette = silhouette(&points, &idx)?;
    Ok(EmbeddingReport {
        pairs,
        points,
        labels,
        silhouette,
    })
}
