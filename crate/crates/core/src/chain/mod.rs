//! The Aldous chain: every pair (leaf u, edge e) fires at rate 1, moving u
//! onto e. Per leaf, the three edges at u's branch point give back the same
//! tree, so the state changes at rate `N (2N - 6)` out of `N (2N - 3)`.

mod rates;
mod state;

use std::io::{BufRead, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::{replicate_rng, SeedRecord};
use crate::tree::{to_newick, Cladogram, Topology, Vertex};
use crate::{Error, Result};

pub use rates::{rate_matrix, spectral_gap, RateMatrix};
pub(crate) use state::exp_sample;
pub use state::ChainState;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Move {
    pub leaf: Vertex,
    /// Endpoints of the target edge in the tree the move is applied to.
    pub edge: (Vertex, Vertex),
}

fn locate(t: &Cladogram, u: Vertex, e: (Vertex, Vertex)) -> Result<usize> {
    t.check_leaf(u)?;
    t.edge_index(e.0, e.1)
        .ok_or_else(|| Error::BadEdge(format!("({}, {}) is not an edge", e.0, e.1)))
}

/// `e` is one of the three edges at the branch point of leaf `u`.
pub fn is_noop(t: &Cladogram, u: Vertex, e: (Vertex, Vertex)) -> Result<bool> {
    locate(t, u, e)?;
    let p = t.neighbors(u)[0] as usize;
    Ok(e.0 == p || e.1 == p)
}

/// `t^{(u,e)}`: detach leaf `u`, suppress its branch point, split `e` and
/// reattach `u` there. No-op pairs return `t` unchanged.
pub fn aldous_move(t: &Cladogram, u: Vertex, e: (Vertex, Vertex)) -> Result<Cladogram> {
    let i = locate(t, u, e)?;
    let mut s = ChainState::new(t);
    match s.apply(u, i) {
        None => Ok(t.clone()),
        Some(_) => Ok(s.to_cladogram()),
    }
}

/// All `N (2N - 3)` pairs with their results, leaf-major, edges in sorted order.
pub fn enumerate_moves(t: &Cladogram) -> impl Iterator<Item = (Move, Cladogram)> + '_ {
    let base = ChainState::new(t);
    (1..=t.n()).flat_map(move |u| {
        let base = base.clone();
        (0..t.n_edges()).map(move |i| {
            let e = t.edge(i);
            let mut s = base.clone();
            let next = match s.apply(u, i) {
                None => t.clone(),
                Some(_) => s.to_cladogram(),
            };
            (Move { leaf: u, edge: e }, next)
        })
    })
}

/// Which events a simulation draws.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Clock {
    /// Only state-changing moves, at total rate `N (2N - 6)`.
    JumpsOnly,
    /// Every pair at rate 1, total `N (2N - 3)`; no-ops are recorded.
    AllPairs,
}

#[derive(Clone, Copy, Debug)]
pub struct SimOptions {
    pub clock: Clock,
    pub snapshot_every: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            clock: Clock::JumpsOnly,
            snapshot_every: 1024,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub mv: Move,
    pub noop: bool,
}

/// A sample path stored as moves, with a full snapshot after every
/// `snapshot_every` events.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub initial: Cladogram,
    pub events: Vec<Event>,
    pub horizon: f64,
    pub seed: Option<SeedRecord>,
    pub snapshot_every: usize,
    snapshots: Vec<Cladogram>,
}

impl Trajectory {
    /// State after the first `k` events.
    pub fn state_after(&self, k: usize) -> Result<Cladogram> {
        if k > self.events.len() {
            return Err(Error::InvalidArgument(format!(
                "{k} > {} events",
                self.events.len()
            )));
        }
        let snap = k / self.snapshot_every;
        let (mut state, from) = if snap == 0 {
            (ChainState::new(&self.initial), 0)
        } else {
            (
                ChainState::new(&self.snapshots[snap - 1]),
                snap * self.snapshot_every,
            )
        };
        for ev in &self.events[from..k] {
            let i = state
                .edge_index(ev.mv.edge.0, ev.mv.edge.1)
                .ok_or_else(|| Error::InternalInconsistency("replayed edge missing".into()))?;
            state.apply(ev.mv.leaf, i);
        }
        Ok(state.to_cladogram())
    }

    pub fn final_state(&self) -> Cladogram {
        self.state_after(self.events.len()).expect("replay")
    }

    /// State at time `t` (right-continuous).
    pub fn state_at(&self, t: f64) -> Cladogram {
        let k = self.events.partition_point(|e| e.t <= t);
        self.state_after(k).expect("replay")
    }

    pub fn jumps(&self) -> usize {
        self.events.iter().filter(|e| !e.noop).count()
    }

    pub fn snapshots(&self) -> &[Cladogram] {
        &self.snapshots
    }

    /// One JSON object per line: a header, then `{t, leaf, edge, noop,
    /// snapshot?}` per event. Trees are stored as edge lists so vertex ids,
    /// which moves refer to, survive the round trip; `initial_newick` is for
    /// reading only.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let header = serde_json::json!({
            "n_leaves": self.initial.n(),
            "initial": &self.initial,
            "initial_newick": to_newick(&self.initial),
            "horizon": self.horizon,
            "snapshot_every": self.snapshot_every,
            "seed": self.seed,
        });
        writeln!(w, "{header}")?;
        for (i, ev) in self.events.iter().enumerate() {
            let mut line = serde_json::json!({
                "t": ev.t,
                "leaf": ev.mv.leaf,
                "edge": [ev.mv.edge.0, ev.mv.edge.1],
                "noop": ev.noop,
            });
            if (i + 1) % self.snapshot_every == 0 {
                line["snapshot"] =
                    serde_json::to_value(&self.snapshots[(i + 1) / self.snapshot_every - 1])?;
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Trajectory> {
        let perr = |line: usize, m: String| Error::Parse {
            line,
            column: 1,
            message: m,
        };
        let mut lines = r.lines().enumerate();
        let (_, head) = lines
            .next()
            .ok_or_else(|| perr(1, "empty trajectory".into()))?;
        let head: serde_json::Value =
            serde_json::from_str(&head.map_err(|e| perr(1, e.to_string()))?)
                .map_err(|e| perr(1, e.to_string()))?;
        let initial: Cladogram = serde_json::from_value(head["initial"].clone())
            .map_err(|e| perr(1, format!("initial tree: {e}")))?;
        let horizon = head["horizon"]
            .as_f64()
            .ok_or_else(|| perr(1, "missing horizon".into()))?;
        let snapshot_every = head["snapshot_every"].as_u64().unwrap_or(1024).max(1) as usize;
        let seed: Option<SeedRecord> = serde_json::from_value(head["seed"].clone()).unwrap_or(None);
        let mut events = vec![];
        for (i, line) in lines {
            let line = line.map_err(|e| perr(i + 1, e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let v: serde_json::Value =
                serde_json::from_str(&line).map_err(|e| perr(i + 1, e.to_string()))?;
            let get = |k: &str| v[k].as_u64().map(|x| x as usize);
            let edge = v["edge"]
                .as_array()
                .filter(|a| a.len() == 2)
                .ok_or_else(|| perr(i + 1, "bad edge".into()))?;
            events.push(Event {
                t: v["t"]
                    .as_f64()
                    .ok_or_else(|| perr(i + 1, "bad time".into()))?,
                mv: Move {
                    leaf: get("leaf").ok_or_else(|| perr(i + 1, "bad leaf".into()))?,
                    edge: (
                        edge[0].as_u64().unwrap_or(0) as usize,
                        edge[1].as_u64().unwrap_or(0) as usize,
                    ),
                },
                noop: v["noop"].as_bool().unwrap_or(false),
            });
        }
        let mut tr = Trajectory {
            initial,
            events,
            horizon,
            seed,
            snapshot_every,
            snapshots: vec![],
        };
        tr.rebuild_snapshots()?;
        Ok(tr)
    }

    fn rebuild_snapshots(&mut self) -> Result<()> {
        let mut state = ChainState::new(&self.initial);
        self.snapshots.clear();
        for (k, ev) in self.events.iter().enumerate() {
            let i = state
                .edge_index(ev.mv.edge.0, ev.mv.edge.1)
                .ok_or_else(|| {
                    Error::BadEdge(format!("event {k}: ({}, {})", ev.mv.edge.0, ev.mv.edge.1))
                })?;
            let changed = state.apply(ev.mv.leaf, i).is_some();
            if changed == ev.noop {
                return Err(Error::InternalInconsistency(format!(
                    "event {k}: no-op flag disagrees"
                )));
            }
            if (k + 1) % self.snapshot_every == 0 {
                self.snapshots.push(state.to_cladogram());
            }
        }
        Ok(())
    }
}

/// Continuous-time chain from `t0` up to `horizon`.
pub fn simulate<R: Rng + ?Sized>(
    t0: &Cladogram,
    horizon: f64,
    rng: &mut R,
    opts: SimOptions,
) -> Result<Trajectory> {
    if !(horizon >= 0.0) {
        return Err(Error::InvalidArgument(format!("horizon {horizon}")));
    }
    if opts.snapshot_every == 0 {
        return Err(Error::InvalidArgument(
            "snapshot_every must be positive".into(),
        ));
    }
    let n = t0.n();
    let rate = match opts.clock {
        Clock::JumpsOnly => (n * (2 * n - 6)) as f64,
        Clock::AllPairs => (n * (2 * n - 3)) as f64,
    };
    let mut state = ChainState::new(t0);
    let mut events = vec![];
    let mut snapshots = vec![];
    let mut t = 0.0;
    if rate > 0.0 {
        loop {
            t += exp_sample(rng, rate);
            if t > horizon {
                break;
            }
            let (leaf, edge, noop) = match opts.clock {
                Clock::JumpsOnly => {
                    let (u, e) = state.random_jump(rng);
                    (u, e, false)
                }
                Clock::AllPairs => {
                    let (u, e, jumped) = state.random_pair(rng);
                    (u, e, !jumped)
                }
            };
            events.push(Event {
                t,
                mv: Move { leaf, edge },
                noop,
            });
            if events.len() % opts.snapshot_every == 0 {
                snapshots.push(state.to_cladogram());
            }
        }
    }
    Ok(Trajectory {
        initial: t0.clone(),
        events,
        horizon,
        seed: None,
        snapshot_every: opts.snapshot_every,
        snapshots,
    })
}

/// [`simulate`] with the stream of replicate `seed.replicate` under `seed.master`.
pub fn simulate_seeded(
    t0: &Cladogram,
    horizon: f64,
    seed: SeedRecord,
    opts: SimOptions,
) -> Result<Trajectory> {
    let mut rng = replicate_rng(seed.master, seed.replicate);
    let mut tr = simulate(t0, horizon, &mut rng, opts)?;
    tr.seed = Some(seed);
    Ok(tr)
}
