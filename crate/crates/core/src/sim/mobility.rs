//! Random waypoint mobility and unit-disk connectivity.

use rand::Rng;

use crate::scenario::{MobilityConfig, MobilityModel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn distance(self, other: Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    pub position: Position,
    pub waypoint: Position,
    /// Current speed in m/s, 0 while paused.
    pub speed: f64,
    /// Pause time left before the next leg.
    pub pause_left: f64,
}

impl NodeState {
    /// A node that starts paused at `position`.
    pub fn new(position: Position, pause: f64) -> Self {
        Self {
            position,
            waypoint: position,
            speed: 0.0,
            pause_left: pause,
        }
    }

    pub fn velocity(&self) -> (f64, f64) {
        let d = self.position.distance(self.waypoint);
        if self.speed == 0.0 || d == 0.0 {
            return (0.0, 0.0);
        }
        (
            self.speed * (self.waypoint.x - self.position.x) / d,
            self.speed * (self.waypoint.y - self.position.y) / d,
        )
    }

    /// Advances by `dt` seconds. A leg that ends inside the step spends the
    /// rest of the step paused.
    pub fn advance<R: Rng>(&mut self, dt: f64, area: f64, cfg: &MobilityConfig, rng: &mut R) {
        if cfg.model == MobilityModel::Static {
            return;
        }
        let mut left = dt;
        // Bounded: each pass either consumes the step or starts a new leg.
        for _ in 0..4 {
            if left <= 0.0 {
                break;
            }
            if self.speed == 0.0 {
                if self.pause_left > left {
                    self.pause_left -= left;
                    return;
                }
                left -= self.pause_left;
                self.pause_left = 0.0;
                self.waypoint = Position {
                    x: rng.gen_range(0.0..=area),
                    y: rng.gen_range(0.0..=area),
                };
                self.speed = if cfg.speed_max > cfg.speed_min {
                    rng.gen_range(cfg.speed_min..=cfg.speed_max)
                } else {
                    cfg.speed_min
                };
                if self.speed == 0.0 {
                    self.pause_left = cfg.pause_s;
                    return;
                }
            }
            let d = self.position.distance(self.waypoint);
            let reach = self.speed * left;
            if reach < d {
                let f = reach / d;
                self.position.x += f * (self.waypoint.x - self.position.x);
                self.position.y += f * (self.waypoint.y - self.position.y);
                return;
            }
            left -= d / self.speed;
            self.position = self.waypoint;
            self.speed = 0.0;
            self.pause_left = cfg.pause_s;
        }
    }
}

/// Unit-disk link table, one slot per unordered pair.
#[derive(Debug, Clone)]
pub struct LinkTable {
    n: usize,
    up: Vec<bool>,
    /// Bumped on every transition, so a delivery can tell whether its link
    /// stayed up since the send.
    version: Vec<u32>,
}

impl LinkTable {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            up: vec![false; n * n],
            version: vec![0; n * n],
        }
    }

    fn slot(&self, a: usize, b: usize) -> usize {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        lo * self.n + hi
    }

    pub fn is_up(&self, a: usize, b: usize) -> bool {
        a != b && self.up[self.slot(a, b)]
    }

    pub fn version(&self, a: usize, b: usize) -> u32 {
        self.version[self.slot(a, b)]
    }

    /// Re-evaluates every pair; returns the transitions `(a, b, up)`, `a < b`.
    pub fn refresh(&mut self, positions: &[Position], range: f64) -> Vec<(usize, usize, bool)> {
        let mut changes = Vec::new();
        for a in 0..self.n {
            for b in a + 1..self.n {
                let now_up = positions[a].distance(positions[b]) <= range;
                let s = a * self.n + b;
                if self.up[s] != now_up {
                    self.up[s] = now_up;
                    self.version[s] = self.version[s].wrapping_add(1);
                    changes.push((a, b, now_up));
                }
            }
        }
        changes
    }

    pub fn neighbors(&self, a: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&b| self.is_up(a, b))
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e = Vec::new();
        for a in 0..self.n {
            for b in a + 1..self.n {
                if self.up[a * self.n + b] {
                    e.push((a, b));
                }
            }
        }
        e
    }
}
