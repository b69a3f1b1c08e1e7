use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{check_action, Environment, Observation, ObservationSpec, StepOutcome};
use crate::error::{Error, Result};
use crate::rng::{stream, stream_rng};

pub(super) const SPEC: ObservationSpec = ObservationSpec {
    height: 10,
    width: 10,
    channels: 4,
    num_actions: 3,
};

const SIZE: i32 = 10;
const PADDLE_ROW: i32 = 9;
const PADDLE_START: i32 = 4;
const BRICK_ROWS: std::ops::Range<i32> = 1..4;
/// The ball enters just below the wall.
const SPAWN_ROW: i32 = 4;

pub const CH_PADDLE: usize = 0;
pub const CH_BALL: usize = 1;
pub const CH_TRAIL: usize = 2;
pub const CH_BRICK: usize = 3;

pub const NOOP: usize = 0;
pub const LEFT: usize = 1;
pub const RIGHT: usize = 2;

/// Paddle-and-ball game on a 10×10 grid.
///
/// Dynamics per tick:
/// 1. the paddle moves one column (clamped at the walls);
/// 2. the ball's next cell is one diagonal step away; a side wall or the
///    ceiling reflects the matching direction component first;
/// 3. if that cell holds a brick, the brick is removed (+1), the vertical
///    direction flips and the ball holds its cell for this tick;
/// 4. if that cell is on the paddle row, the ball bounces when the paddle is
///    under it (vertical flip, ball holds its cell) and otherwise drops onto
///    the bottom row and the episode ends;
/// 5. clearing the last brick rebuilds the wall and respawns the ball from
///    the seeded stream.
#[derive(Clone, Debug)]
pub struct Breakout {
    rng: ChaCha8Rng,
    paddle: i32,
    ball: (i32, i32),
    dir: (i32, i32),
    trail: Option<(i32, i32)>,
    bricks: [[bool; 10]; 10],
    terminal: bool,
}

impl Breakout {
    pub fn new(seed: u64) -> Self {
        let mut env = Self {
            rng: stream_rng(seed, stream::ENVIRONMENT),
            paddle: PADDLE_START,
            ball: (SPAWN_ROW, 0),
            dir: (1, 1),
            trail: None,
            bricks: [[false; 10]; 10],
            terminal: true,
        };
        env.reset();
        env
    }

    fn spawn_ball(&mut self) {
        let col = self.rng.gen_range(0..SIZE);
        self.ball = (SPAWN_ROW, col);
        // Head toward the middle so the first descent is never wall-bound.
        self.dir = (1, if col < SIZE / 2 { 1 } else { -1 });
    }

    fn rebuild_wall(&mut self) {
        for row in BRICK_ROWS {
            self.bricks[row as usize] = [true; 10];
        }
    }

    fn bricks_left(&self) -> usize {
        self.bricks.iter().flatten().filter(|&&b| b).count()
    }

    pub fn paddle(&self) -> usize {
        self.paddle as usize
    }

    pub fn ball(&self) -> (usize, usize) {
        (self.ball.0 as usize, self.ball.1 as usize)
    }

    pub fn direction(&self) -> (i32, i32) {
        self.dir
    }

    pub fn is_terminal(&self) -> bool {
        self.terminal
    }

    fn observe(&self) -> Observation {
        let mut obs = Observation::zeros(SPEC);
        obs.set(CH_PADDLE, PADDLE_ROW as usize, self.paddle as usize);
        obs.set(CH_BALL, self.ball.0 as usize, self.ball.1 as usize);
        if let Some((r, c)) = self.trail {
            obs.set(CH_TRAIL, r as usize, c as usize);
        }
        for (r, row) in self.bricks.iter().enumerate() {
            for (c, &b) in row.iter().enumerate() {
                if b {
                    obs.set(CH_BRICK, r, c);
                }
            }
        }
        obs
    }
}

impl Environment for Breakout {
    fn spec(&self) -> ObservationSpec {
        SPEC
    }

    fn seed(&mut self, seed: u64) {
        self.rng = stream_rng(seed, stream::ENVIRONMENT);
    }

    fn reset(&mut self) -> Observation {
        self.paddle = PADDLE_START;
        self.bricks = [[false; 10]; 10];
        self.rebuild_wall();
        self.trail = None;
        self.spawn_ball();
        self.terminal = false;
        self.observe()
    }

    fn step(&mut self, action: usize) -> Result<StepOutcome> {
        if self.terminal {
            return Err(Error::EpisodeOver);
        }
        check_action(action, SPEC.num_actions)?;
        match action {
            LEFT => self.paddle = (self.paddle - 1).max(0),
            RIGHT => self.paddle = (self.paddle + 1).min(SIZE - 1),
            _ => {}
        }

        let (r, c) = self.ball;
        let (mut dr, mut dc) = self.dir;
        let mut nc = c + dc;
        if !(0..SIZE).contains(&nc) {
            dc = -dc;
            nc = c + dc;
        }
        let mut nr = r + dr;
        if nr < 0 {
            dr = -dr;
            nr = r + dr;
        }

        self.trail = Some(self.ball);
        let mut reward = 0.0;
        if self.bricks[nr as usize][nc as usize] {
            self.bricks[nr as usize][nc as usize] = false;
            reward = 1.0;
            dr = -dr;
            if self.bricks_left() == 0 {
                self.rebuild_wall();
                self.spawn_ball();
                (dr, dc) = self.dir;
            }
        } else if nr == PADDLE_ROW {
            if nc == self.paddle {
                dr = -dr;
            } else {
                self.ball = (nr, nc);
                self.terminal = true;
            }
        } else {
            self.ball = (nr, nc);
        }
        self.dir = (dr, dc);

        Ok(StepOutcome {
            obs: self.observe(),
            reward,
            terminal: self.terminal,
        })
    }
}
