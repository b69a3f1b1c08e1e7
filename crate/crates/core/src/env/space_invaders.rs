use super::{check_action, Environment, Observation, ObservationSpec, StepOutcome};
use crate::error::{Error, Result};

pub(super) const SPEC: ObservationSpec = ObservationSpec {
    height: 10,
    width: 10,
    channels: 6,
    num_actions: 4,
};

const SIZE: i32 = 10;
const CANNON_ROW: i32 = 9;
const CANNON_START: i32 = 5;
const BLOCK_ROWS: std::ops::Range<usize> = 0..4;
const BLOCK_COLS: std::ops::Range<usize> = 2..8;
const BASE_SPEED: u32 = 4;
const FIRE_COOLDOWN: u32 = 5;
const ENEMY_SHOT_PERIOD: u32 = 10;

pub const CH_CANNON: usize = 0;
pub const CH_ALIEN: usize = 1;
pub const CH_FRIENDLY: usize = 2;
pub const CH_ENEMY: usize = 3;
pub const CH_ALIEN_LEFT: usize = 4;
pub const CH_ALIEN_RIGHT: usize = 5;

pub const NOOP: usize = 0;
pub const LEFT: usize = 1;
pub const RIGHT: usize = 2;
pub const FIRE: usize = 3;

/// Fully deterministic cannon-versus-aliens game on a 10×10 grid.
///
/// Tick order:
/// 1. the cannon moves (clamped) or fires; firing needs no friendly bullet in
///    flight and an expired cooldown, and starts a new cooldown;
/// 2. the friendly bullet climbs one row and destroys the alien it meets (+1);
/// 3. enemy bullets fall one row; one landing on the cannon ends the episode;
/// 4. every `speed` ticks the alien block shifts one column, or descends and
///    reverses at a wall; an alien reaching the cannon row ends the episode;
/// 5. every tenth tick the bottom alien of the next occupied column (cycling
///    left to right) fires;
/// 6. a cleared wave is replaced by a fresh block that moves faster.
///
/// `speed` starts at 4 ticks per move and drops by one per cleared wave, by
/// one more once 12 or fewer aliens remain and again at 4 or fewer, never
/// below 1.
#[derive(Clone, Debug)]
pub struct SpaceInvaders {
    cannon: i32,
    aliens: [[bool; 10]; 10],
    alien_dir: i32,
    move_timer: u32,
    wave: u32,
    friendly: Option<(i32, i32)>,
    enemy: Vec<(i32, i32)>,
    cooldown: u32,
    enemy_timer: u32,
    enemy_cursor: usize,
    terminal: bool,
}

impl Default for SpaceInvaders {
    fn default() -> Self {
        Self::new()
    }
}

impl SpaceInvaders {
    pub fn new() -> Self {
        let mut env = Self {
            cannon: CANNON_START,
            aliens: [[false; 10]; 10],
            alien_dir: -1,
            move_timer: BASE_SPEED,
            wave: 0,
            friendly: None,
            enemy: Vec::new(),
            cooldown: 0,
            enemy_timer: ENEMY_SHOT_PERIOD,
            enemy_cursor: 0,
            terminal: true,
        };
        env.reset();
        env
    }

    fn spawn_wave(&mut self) {
        self.aliens = [[false; 10]; 10];
        for r in BLOCK_ROWS {
            for c in BLOCK_COLS {
                self.aliens[r][c] = true;
            }
        }
        self.alien_dir = -1;
        self.move_timer = self.speed();
    }

    pub fn aliens_left(&self) -> usize {
        self.aliens.iter().flatten().filter(|&&a| a).count()
    }

    /// Ticks between alien moves.
    pub fn speed(&self) -> u32 {
        let remaining = self.aliens_left();
        let mut cut = self.wave.min(BASE_SPEED);
        if remaining <= 12 {
            cut += 1;
        }
        if remaining <= 4 {
            cut += 1;
        }
        BASE_SPEED.saturating_sub(cut).max(1)
    }

    pub fn cannon(&self) -> usize {
        self.cannon as usize
    }

    pub fn wave(&self) -> u32 {
        self.wave
    }

    pub fn friendly_bullet(&self) -> Option<(usize, usize)> {
        self.friendly.map(|(r, c)| (r as usize, c as usize))
    }

    pub fn enemy_bullets(&self) -> Vec<(usize, usize)> {
        self.enemy
            .iter()
            .map(|&(r, c)| (r as usize, c as usize))
            .collect()
    }

    pub fn alien_dir(&self) -> i32 {
        self.alien_dir
    }

    fn alien_at(&self, (r, c): (i32, i32)) -> bool {
        (0..SIZE).contains(&r) && (0..SIZE).contains(&c) && self.aliens[r as usize][c as usize]
    }

    /// Destroys the alien under the friendly bullet, if any.
    fn resolve_friendly_hit(&mut self) -> f64 {
        match self.friendly {
            Some(pos) if self.alien_at(pos) => {
                self.aliens[pos.0 as usize][pos.1 as usize] = false;
                self.friendly = None;
                1.0
            }
            _ => 0.0,
        }
    }

    fn move_aliens(&mut self) {
        let blocked = self.aliens.iter().any(|row| {
            row.iter().enumerate().any(|(c, &a)| {
                let nc = c as i32 + self.alien_dir;
                a && !(0..SIZE).contains(&nc)
            })
        });
        let mut next = [[false; 10]; 10];
        for r in 0..10 {
            for c in 0..10 {
                if !self.aliens[r][c] {
                    continue;
                }
                if blocked {
                    if r + 1 < 10 {
                        next[r + 1][c] = true;
                    }
                } else {
                    next[r][(c as i32 + self.alien_dir) as usize] = true;
                }
            }
        }
        if blocked {
            self.alien_dir = -self.alien_dir;
        }
        self.aliens = next;
    }

    fn enemy_fire(&mut self) {
        for offset in 0..10 {
            let col = (self.enemy_cursor + offset) % 10;
            if let Some(row) = (0..10).rev().find(|&r| self.aliens[r][col]) {
                if row + 1 < 10 {
                    self.enemy.push((row as i32 + 1, col as i32));
                }
                self.enemy_cursor = (col + 1) % 10;
                return;
            }
        }
    }

    fn observe(&self) -> Observation {
        let mut obs = Observation::zeros(SPEC);
        obs.set(CH_CANNON, CANNON_ROW as usize, self.cannon as usize);
        let dir_channel = if self.alien_dir < 0 {
            CH_ALIEN_LEFT
        } else {
            CH_ALIEN_RIGHT
        };
        for (r, row) in self.aliens.iter().enumerate() {
            for (c, &a) in row.iter().enumerate() {
                if a {
                    obs.set(CH_ALIEN, r, c);
                    obs.set(dir_channel, r, c);
                }
            }
        }
        if let Some((r, c)) = self.friendly {
            obs.set(CH_FRIENDLY, r as usize, c as usize);
        }
        for &(r, c) in &self.enemy {
            obs.set(CH_ENEMY, r as usize, c as usize);
        }
        obs
    }
}

impl Environment for SpaceInvaders {
    fn spec(&self) -> ObservationSpec {
        SPEC
    }

    fn seed(&mut self, _seed: u64) {}

    fn reset(&mut self) -> Observation {
        self.cannon = CANNON_START;
        self.wave = 0;
        self.friendly = None;
        self.enemy.clear();
        self.cooldown = 0;
        self.enemy_timer = ENEMY_SHOT_PERIOD;
        self.enemy_cursor = 0;
        self.spawn_wave();
        self.terminal = false;
        self.observe()
    }

    fn step(&mut self, action: usize) -> Result<StepOutcome> {
        if self.terminal {
            return Err(Error::EpisodeOver);
        }
        check_action(action, SPEC.num_actions)?;
        let mut reward = 0.0;

        match action {
            LEFT => self.cannon = (self.cannon - 1).max(0),
            RIGHT => self.cannon = (self.cannon + 1).min(SIZE - 1),
            FIRE if self.friendly.is_none() && self.cooldown == 0 => {
                self.friendly = Some((CANNON_ROW, self.cannon));
                self.cooldown = FIRE_COOLDOWN;
            }
            _ => {}
        }

        if let Some((r, c)) = self.friendly {
            self.friendly = (r > 0).then_some((r - 1, c));
        }
        reward += self.resolve_friendly_hit();

        for b in &mut self.enemy {
            b.0 += 1;
        }
        self.enemy.retain(|&(r, _)| r < SIZE);
        if self.enemy.contains(&(CANNON_ROW, self.cannon)) {
            self.terminal = true;
        }

        self.move_timer -= 1;
        if self.move_timer == 0 {
            self.move_aliens();
            reward += self.resolve_friendly_hit();
            if self.aliens[CANNON_ROW as usize].iter().any(|&a| a) {
                self.terminal = true;
            }
            self.move_timer = self.speed();
        }

        self.enemy_timer -= 1;
        if self.enemy_timer == 0 {
            self.enemy_fire();
            self.enemy_timer = ENEMY_SHOT_PERIOD;
            if self.enemy.contains(&(CANNON_ROW, self.cannon)) {
                self.terminal = true;
            }
        }

        self.cooldown = self.cooldown.saturating_sub(1);

        if !self.terminal && self.aliens_left() == 0 {
            self.wave += 1;
            self.spawn_wave();
        }

        Ok(StepOutcome {
            obs: self.observe(),
            reward,
            terminal: self.terminal,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_layout() {
        let obs = SpaceInvaders::new().reset();
        assert_eq!(obs.channel_count(CH_ALIEN), 24);
        assert_eq!(obs.channel_count(CH_ALIEN_LEFT), 24);
        assert_eq!(obs.channel_count(CH_ALIEN_RIGHT), 0);
        assert_eq!(obs.channel_count(CH_CANNON), 1);
        assert!(obs.get(CH_CANNON, 9, 5));
        assert!(obs.get(CH_ALIEN, 0, 2) && obs.get(CH_ALIEN, 3, 7));
    }

    #[test]
    fn seed_is_ignored() {
        let mut a = SpaceInvaders::new();
        let mut b = SpaceInvaders::new();
        assert_eq!(a.reset_seeded(1), b.reset_seeded(99));
    }

    #[test]
    fn aliens_march_left_then_descend() {
        let mut env = SpaceInvaders::new();
        let mut obs = None;
        for _ in 0..4 {
            obs = Some(env.step(NOOP).unwrap().obs);
        }
        let obs = obs.unwrap();
        assert!(obs.get(CH_ALIEN, 0, 1) && !obs.get(CH_ALIEN, 0, 7));
        // one more move reaches the wall, the next descends
        for _ in 0..4 {
            env.step(NOOP).unwrap();
        }
        assert_eq!(env.alien_dir(), -1);
        let mut last = None;
        for _ in 0..4 {
            last = Some(env.step(NOOP).unwrap().obs);
        }
        assert_eq!(env.alien_dir(), 1);
        let last = last.unwrap();
        assert!(last.get(CH_ALIEN, 1, 0) && last.get(CH_ALIEN_RIGHT, 1, 0));
        assert!(!last.get(CH_ALIEN, 0, 0));
    }

    #[test]
    fn fire_respects_cooldown_and_single_bullet() {
        let mut env = SpaceInvaders::new();
        env.step(FIRE).unwrap();
        assert_eq!(env.friendly_bullet(), Some((8, 5)));
        env.step(FIRE).unwrap();
        assert_eq!(env.friendly_bullet(), Some((7, 5)));
    }

    #[test]
    fn shooting_an_alien_pays_one() {
        let mut env = SpaceInvaders::new();
        env.aliens = [[false; 10]; 10];
        env.aliens[7][5] = true;
        env.aliens[0][0] = true;
        env.move_timer = 100;
        env.step(FIRE).unwrap();
        let out = env.step(NOOP).unwrap();
        assert_eq!(out.reward, 1.0);
        assert_eq!(env.aliens_left(), 1);
        assert_eq!(env.friendly_bullet(), None);
    }

    #[test]
    fn enemy_bullet_kills_cannon() {
        let mut env = SpaceInvaders::new();
        env.enemy.push((8, 5));
        let out = env.step(NOOP).unwrap();
        assert!(out.terminal);
        assert!(matches!(env.step(NOOP), Err(Error::EpisodeOver)));
    }

    #[test]
    fn speed_ramps() {
        let mut env = SpaceInvaders::new();
        assert_eq!(env.speed(), 4);
        env.aliens = [[false; 10]; 10];
        for c in 0..4 {
            env.aliens[0][c] = true;
        }
        assert_eq!(env.speed(), 2);
        env.wave = 3;
        assert_eq!(env.speed(), 1);
    }

    #[test]
    fn cleared_wave_respawns() {
        let mut env = SpaceInvaders::new();
        env.aliens = [[false; 10]; 10];
        env.aliens[8][5] = true;
        env.move_timer = 100;
        let out = env.step(FIRE).unwrap();
        assert_eq!(out.reward, 1.0);
        assert_eq!(env.wave(), 1);
        assert_eq!(env.aliens_left(), 24);
        assert_eq!(env.speed(), 3);
    }
}
