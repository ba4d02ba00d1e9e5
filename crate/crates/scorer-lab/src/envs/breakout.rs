//! MinAtar-style Breakout on a 10x10 grid with four binary channels
//! (paddle, ball, trail, brick) and the minimal 3-action set
//! (no-op, left, right). Reward +1 per brick; the episode ends when the
//! ball passes the paddle.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const GRID: usize = 10;
pub const CHANNELS: usize = 4;
pub const OBS_DIM: usize = GRID * GRID * CHANNELS;
pub const ACTION_DIM: usize = 3;

pub const CH_PADDLE: usize = 0;
pub const CH_BALL: usize = 1;
pub const CH_TRAIL: usize = 2;
pub const CH_BRICK: usize = 3;

/// Ball directions: 0 = up-left, 1 = up-right, 2 = down-left, 3 = down-right.
#[derive(Debug, Clone)]
pub struct Breakout {
    pub ball_x: usize,
    pub ball_y: usize,
    pub ball_dir: usize,
    pub paddle_x: usize,
    pub last_x: usize,
    pub last_y: usize,
    pub brick_map: [[bool; GRID]; GRID],
    pub strike: bool,
    pub terminal: bool,
}

impl Breakout {
    pub fn reset(rng: &mut ChaCha8Rng) -> Self {
        let ball_start = rng.gen_range(0..2u32);
        let (ball_x, ball_dir) = if ball_start == 0 { (0, 2) } else { (9, 3) };
        let ball_y = 3;
        let mut brick_map = [[false; GRID]; GRID];
        for row in brick_map.iter_mut().take(4).skip(1) {
            for cell in row.iter_mut() {
                *cell = true;
            }
        }
        Self {
            ball_x,
            ball_y,
            ball_dir,
            paddle_x: 4,
            last_x: ball_x,
            last_y: ball_y,
            brick_map,
            strike: false,
            terminal: false,
        }
    }

    /// Channel-last row-major flattening: index = (y * 10 + x) * 4 + channel.
    pub fn observation(&self) -> Vec<f64> {
        let mut obs = vec![0.0; OBS_DIM];
        let mut put = |y: usize, x: usize, c: usize| {
            obs[(y * GRID + x) * CHANNELS + c] = 1.0;
        };
        put(9, self.paddle_x, CH_PADDLE);
        put(self.ball_y, self.ball_x, CH_BALL);
        put(self.last_y, self.last_x, CH_TRAIL);
        for y in 0..GRID {
            for x in 0..GRID {
                if self.brick_map[y][x] {
                    put(y, x, CH_BRICK);
                }
            }
        }
        obs
    }

    pub fn step(&mut self, action: usize) -> (f64, bool) {
        assert!(action < ACTION_DIM, "invalid Breakout action {action}");
        if self.terminal {
            return (0.0, true);
        }
        let mut reward = 0.0;
        match action {
            1 => self.paddle_x = self.paddle_x.saturating_sub(1),
            2 => self.paddle_x = (self.paddle_x + 1).min(GRID - 1),
            _ => {}
        }

        self.last_x = self.ball_x;
        self.last_y = self.ball_y;
        let (dx, dy): (i32, i32) = match self.ball_dir {
            0 => (-1, -1),
            1 => (1, -1),
            2 => (-1, 1),
            _ => (1, 1),
        };
        let mut new_x = self.ball_x as i32 + dx;
        let mut new_y = self.ball_y as i32 + dy;
        let mut strike_toggle = false;
        if new_x < 0 || new_x > 9 {
            new_x = new_x.clamp(0, 9);
            self.ball_dir = [1, 0, 3, 2][self.ball_dir];
        }
        if new_y < 0 {
            new_y = 0;
            self.ball_dir = [2, 3, 0, 1][self.ball_dir];
        } else if self.brick_map[new_y as usize][new_x as usize] {
            strike_toggle = true;
            if !self.strike {
                reward += 1.0;
                self.strike = true;
                self.brick_map[new_y as usize][new_x as usize] = false;
                new_y = self.last_y as i32;
                self.ball_dir = [3, 2, 1, 0][self.ball_dir];
            }
        } else if new_y == 9 {
            if self.brick_map.iter().flatten().all(|&b| !b) {
                for row in self.brick_map.iter_mut().take(4).skip(1) {
                    for cell in row.iter_mut() {
                        *cell = true;
                    }
                }
            }
            if self.ball_x == self.paddle_x {
                self.ball_dir = [3, 2, 1, 0][self.ball_dir];
                new_y = self.last_y as i32;
            } else if new_x as usize == self.paddle_x {
                self.ball_dir = [2, 3, 0, 1][self.ball_dir];
                new_y = self.last_y as i32;
            } else {
                self.terminal = true;
            }
        }
        if !strike_toggle {
            self.strike = false;
        }
        self.ball_x = new_x as usize;
        self.ball_y = new_y as usize;
        (reward, self.terminal)
    }
}
