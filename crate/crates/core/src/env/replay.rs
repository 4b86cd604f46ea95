//! Replay over pre-featurized user and item tables.
//!
//! File layout (comma separated, UTF-8):
//!
//! ```text
//! d_x,<int>,d_z,<int>
//! [items]
//! <d_x + d_z floats per row>
//! [users]
//! <d_x + d_z floats per row>
//! ```
//!
//! Blank lines are ignored. The reward of showing item `v` to user `u` is
//! `⟨u, v⟩`.

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;

use super::{EnvBounds, Environment, Round};
use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::util::argmax_first;

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayEnv {
    dim_x: usize,
    dim_z: usize,
    items: Vec<Vec<f64>>,
    users: Vec<Vec<f64>>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

impl ReplayEnv {
    pub fn new(dim_x: usize, dim_z: usize, items: Vec<Vec<f64>>, users: Vec<Vec<f64>>) -> Result<Self> {
        let width = dim_x + dim_z;
        if dim_x == 0 {
            return Err(Error::InvalidParameter("replay needs d_x ≥ 1".into()));
        }
        if items.is_empty() || users.is_empty() {
            return Err(Error::InvalidParameter("replay needs at least one item and one user".into()));
        }
        if let Some(row) = items.iter().chain(&users).find(|r| r.len() != width) {
            return Err(Error::Dimension {
                context: "replay row",
                expected: width,
                got: row.len(),
            });
        }
        Ok(ReplayEnv {
            dim_x,
            dim_z,
            items,
            users,
        })
    }

    /// Keeps only the first `k` items as arms.
    pub fn with_arms(mut self, k: usize) -> Result<Self> {
        if k == 0 || k > self.items.len() {
            return Err(Error::Config(format!(
                "requested {k} arms but the item table has {} rows",
                self.items.len()
            )));
        }
        self.items.truncate(k);
        Ok(self)
    }

    pub fn items(&self) -> &[Vec<f64>] {
        &self.items
    }

    pub fn users(&self) -> &[Vec<f64>] {
        &self.users
    }

    pub fn user_round(&self, index: usize) -> Round {
        let row = &self.users[index];
        Round {
            x: row[..self.dim_x].to_vec(),
            z: row[self.dim_x..].to_vec(),
        }
    }

    /// `⟨(x, z), v_arm⟩`.
    pub fn reward_of(&self, arm: usize, round: &Round) -> Result<f64> {
        let item = self.items.get(arm).ok_or(Error::ArmOutOfRange {
            arm,
            arms: self.items.len(),
        })?;
        Ok(dot(&round.x, &item[..self.dim_x]) + dot(&round.z, &item[self.dim_x..]))
    }

    /// Best fixed item for a user row.
    pub fn best_item(&self, round: &Round) -> usize {
        argmax_first((0..self.items.len()).map(|a| self.reward_of(a, round).unwrap_or(f64::NEG_INFINITY)))
    }
}

impl Environment for ReplayEnv {
    fn num_arms(&self) -> usize {
        self.items.len()
    }

    fn dim_x(&self) -> usize {
        self.dim_x
    }

    fn dim_z(&self) -> usize {
        self.dim_z
    }

    fn bounds(&self) -> EnvBounds {
        let l_x = self.users.iter().map(|u| norm(&u[..self.dim_x])).fold(0.0, f64::max);
        let l_z = self.users.iter().map(|u| norm(&u[self.dim_x..])).fold(0.0, f64::max);
        let n = self.users.len() as f64;
        let mean: Vec<f64> = (0..self.dim_z)
            .map(|j| self.users.iter().map(|u| u[self.dim_x + j]).sum::<f64>() / n)
            .collect();
        let mut l_eps: f64 = 0.0;
        let mut var = 0.0;
        for u in &self.users {
            let dev: Vec<f64> = u[self.dim_x..].iter().zip(&mean).map(|(a, m)| a - m).collect();
            l_eps = l_eps.max(norm(&dev));
            var += dot(&dev, &dev);
        }
        let sigma_eps = if self.dim_z > 0 {
            (var / (n * self.dim_z as f64)).sqrt()
        } else {
            0.0
        };
        EnvBounds {
            l_x,
            l_z,
            l_eps,
            sigma_eps,
            r_eta: 0.0,
        }
    }

    fn draw(&self, rng: &mut SimRng) -> Round {
        self.user_round(rng.random_range(0..self.users.len()))
    }

    fn reward(&self, arm: usize, round: &Round, _rng: &mut SimRng) -> Result<f64> {
        self.reward_of(arm, round)
    }

    fn expected_reward(&self, arm: usize, round: &Round) -> Result<f64> {
        self.reward_of(arm, round)
    }
}

pub fn load_replay(path: impl AsRef<Path>) -> Result<ReplayEnv> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_replay(&text, path)
}

#[derive(PartialEq)]
enum Section {
    Header,
    Items,
    Users,
}

/// Parses a feature table; `origin` only labels diagnostics.
pub fn parse_replay(text: &str, origin: &Path) -> Result<ReplayEnv> {
    let err = |line: usize, message: String| Error::Parse {
        path: PathBuf::from(origin),
        line,
        message,
    };
    let mut dims: Option<(usize, usize)> = None;
    let mut section = Section::Header;
    let mut items = Vec::new();
    let mut users = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let Some((d_x, d_z)) = dims else {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let parsed = match fields.as_slice() {
                ["d_x", dx, "d_z", dz] => dx.parse::<usize>().ok().zip(dz.parse::<usize>().ok()),
                _ => None,
            };
            match parsed {
                Some(d) if d.0 > 0 => dims = Some(d),
                _ => return Err(err(line_no, format!("expected header `d_x,<int>,d_z,<int>`, found `{line}`"))),
            }
            continue;
        };
        match line {
            "[items]" if section == Section::Header => section = Section::Items,
            "[users]" if section == Section::Items => section = Section::Users,
            _ if line.starts_with('[') => {
                return Err(err(line_no, format!("unexpected section marker `{line}`")));
            }
            _ => {
                let row = line
                    .split(',')
                    .map(|f| {
                        let f = f.trim();
                        f.parse::<f64>()
                            .ok()
                            .filter(|v| v.is_finite())
                            .ok_or_else(|| err(line_no, format!("non-numeric field `{f}`")))
                    })
                    .collect::<Result<Vec<f64>>>()?;
                if row.len() != d_x + d_z {
                    return Err(err(
                        line_no,
                        format!("row has {} fields, expected d_x + d_z = {}", row.len(), d_x + d_z),
                    ));
                }
                match section {
                    Section::Items => items.push(row),
                    Section::Users => users.push(row),
                    Section::Header => {
                        return Err(err(line_no, "data row before the `[items]` section".into()));
                    }
                }
            }
        }
    }
    let line_count = text.lines().count().max(1);
    let (d_x, d_z) = dims.ok_or_else(|| err(1, "missing header".into()))?;
    if items.is_empty() {
        return Err(err(line_count, "no item rows".into()));
    }
    if users.is_empty() {
        return Err(err(line_count, "no user rows".into()));
    }
    ReplayEnv::new(d_x, d_z, items, users)
}
