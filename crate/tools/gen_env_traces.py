#!/usr/bin/env python3
"""Generates the committed environment reference-trace fixtures.

The dynamics below are transcribed from the public reference
implementations of CartPole-v1, Acrobot-v1, MountainCar-v0 (classic
control, including the 500/500/200-step time limits) and MinAtar
Breakout. Initial states come from the lab's own seeded resets, exported
with:

    cargo run -p scorer-lab --example dump_init_states > /tmp/init_states.json
    python3 tools/gen_env_traces.py /tmp/init_states.json \
        crates/scorer-lab/tests/fixtures/env_traces.csv

Each trace row is (env, seed, t, action, reward, done, obs_hash) where
obs_hash is 64-bit FNV-1a over the observation's f64 values serialized
little-endian. Squares are written as explicit products so every
floating-point operation is a single IEEE-754 mul/add/div, matching a
straightforward compiled transcription bit for bit.
"""

import csv
import json
import math
import random
import struct
import sys

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x00000100000001B3
MASK64 = (1 << 64) - 1

# Deterministic sine/cosine mirroring the lab's environment kernels
# (Cody-Waite reduction by pi/2 plus fdlibm minimax polynomials), so
# observations replay bit-exactly regardless of the platform libm.
_INV_PIO2 = 6.36619772367581382433e-01
_PIO2_HI = 1.57079632679489655800e+00
_PIO2_LO = 6.12323399573676603587e-17
_S = (-1.66666666666666324348e-01, 8.33333333332248946124e-03,
      -1.98412698298579493134e-04, 2.75573137070700676789e-06,
      -2.50507602534068634195e-08, 1.58969099521155010221e-10)
_C = (4.16666666666666019037e-02, -1.38888888888741095749e-03,
      2.48015872894767294178e-05, -2.75573143513906633035e-07,
      2.08757232129817482790e-09, -1.13596475577881948265e-11)


def _kernel_sin(x):
    z = x * x
    r = _S[1] + z * (_S[2] + z * (_S[3] + z * (_S[4] + z * _S[5])))
    return x + z * x * (_S[0] + z * r)


def _kernel_cos(x):
    z = x * x
    r = z * (_C[0] + z * (_C[1] + z * (_C[2] + z * (_C[3] + z * (_C[4] + z * _C[5])))))
    hz = 0.5 * z
    w = 1.0 - hz
    return w + (((1.0 - w) - hz) + z * r)


def dsin_cos(x):
    k = math.floor(x * _INV_PIO2 + 0.5)
    r = (x - k * _PIO2_HI) - k * _PIO2_LO
    quadrant = int(k) % 4
    s, c = _kernel_sin(r), _kernel_cos(r)
    if quadrant == 0:
        return s, c
    if quadrant == 1:
        return c, -s
    if quadrant == 2:
        return -s, -c
    return -c, s


def dsin(x):
    return dsin_cos(x)[0]


def dcos(x):
    return dsin_cos(x)[1]



def fnv1a_obs(obs):
    h = FNV_OFFSET
    for v in obs:
        for b in struct.pack("<d", v):
            h ^= b
            h = (h * FNV_PRIME) & MASK64
    return h


class CartPole:
    TIME_LIMIT = 500
    ACTIONS = 2

    def __init__(self, state):
        self.state = list(state)

    def observation(self):
        return list(self.state)

    def step(self, action):
        x, x_dot, theta, theta_dot = self.state
        gravity, masspole, total_mass = 9.8, 0.1, 1.1
        length, polemass_length = 0.5, 0.1 * 0.5
        force_mag, tau = 10.0, 0.02
        force = force_mag if action == 1 else -force_mag
        sintheta, costheta = dsin_cos(theta)
        temp = (force + polemass_length * theta_dot * theta_dot * sintheta) / total_mass
        thetaacc = (gravity * sintheta - costheta * temp) / (
            length * (4.0 / 3.0 - masspole * costheta * costheta / total_mass)
        )
        xacc = temp - polemass_length * thetaacc * costheta / total_mass
        x = x + tau * x_dot
        x_dot = x_dot + tau * xacc
        theta = theta + tau * theta_dot
        theta_dot = theta_dot + tau * thetaacc
        self.state = [x, x_dot, theta, theta_dot]
        theta_threshold = 12.0 * 2.0 * math.pi / 360.0
        terminated = (
            x < -2.4 or x > 2.4 or theta < -theta_threshold or theta > theta_threshold
        )
        return 1.0, terminated


class MountainCar:
    TIME_LIMIT = 200
    ACTIONS = 3

    def __init__(self, state):
        self.state = list(state)

    def observation(self):
        return list(self.state)

    def step(self, action):
        position, velocity = self.state
        velocity += (action - 1) * 0.001 + dcos(3.0 * position) * (-0.0025)
        velocity = min(max(velocity, -0.07), 0.07)
        position += velocity
        position = min(max(position, -1.2), 0.6)
        if position == -1.2 and velocity < 0.0:
            velocity = 0.0
        self.state = [position, velocity]
        terminated = position >= 0.5 and velocity >= 0.0
        return -1.0, terminated


def _acrobot_dsdt(s):
    m1 = m2 = 1.0
    l1 = 1.0
    lc1 = lc2 = 0.5
    i1 = i2 = 1.0
    g = 9.8
    theta1, theta2, dtheta1, dtheta2, a = s
    d1 = (
        m1 * lc1 * lc1
        + m2 * (l1 * l1 + lc2 * lc2 + 2.0 * l1 * lc2 * dcos(theta2))
        + i1
        + i2
    )
    d2 = m2 * (lc2 * lc2 + l1 * lc2 * dcos(theta2)) + i2
    phi2 = m2 * lc2 * g * dcos(theta1 + theta2 - math.pi / 2.0)
    phi1 = (
        -m2 * l1 * lc2 * dtheta2 * dtheta2 * dsin(theta2)
        - 2.0 * m2 * l1 * lc2 * dtheta2 * dtheta1 * dsin(theta2)
        + (m1 * lc1 + m2 * l1) * g * dcos(theta1 - math.pi / 2.0)
        + phi2
    )
    ddtheta2 = (
        a
        + d2 / d1 * phi1
        - m2 * l1 * lc2 * dtheta1 * dtheta1 * dsin(theta2)
        - phi2
    ) / (m2 * lc2 * lc2 + i2 - d2 * d2 / d1)
    ddtheta1 = -(d2 * ddtheta2 + phi1) / d1
    return [dtheta1, dtheta2, ddtheta1, ddtheta2, 0.0]


def _wrap(x, low, high):
    diff = high - low
    while x > high:
        x -= diff
    while x < low:
        x += diff
    return x


class Acrobot:
    TIME_LIMIT = 500
    ACTIONS = 3

    def __init__(self, state):
        self.state = list(state)

    def observation(self):
        t1, t2, dt1, dt2 = self.state
        return [dcos(t1), dsin(t1), dcos(t2), dsin(t2), dt1, dt2]

    def step(self, action):
        torque = [-1.0, 0.0, 1.0][action]
        dt = 0.2
        y0 = self.state + [torque]
        k1 = _acrobot_dsdt(y0)
        k2 = _acrobot_dsdt([y0[i] + dt / 2.0 * k1[i] for i in range(5)])
        k3 = _acrobot_dsdt([y0[i] + dt / 2.0 * k2[i] for i in range(5)])
        k4 = _acrobot_dsdt([y0[i] + dt * k3[i] for i in range(5)])
        ns = [
            y0[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            for i in range(5)
        ]
        max_vel_1 = 4.0 * math.pi
        max_vel_2 = 9.0 * math.pi
        self.state = [
            _wrap(ns[0], -math.pi, math.pi),
            _wrap(ns[1], -math.pi, math.pi),
            min(max(ns[2], -max_vel_1), max_vel_1),
            min(max(ns[3], -max_vel_2), max_vel_2),
        ]
        terminated = (
            -dcos(self.state[0]) - dcos(self.state[1] + self.state[0]) > 1.0
        )
        reward = 0.0 if terminated else -1.0
        return reward, terminated


class Breakout:
    TIME_LIMIT = None
    ACTIONS = 3
    GRID = 10

    def __init__(self, init):
        self.ball_x = init["ball_x"]
        self.ball_y = init["ball_y"]
        self.ball_dir = init["ball_dir"]
        self.paddle_x = init["paddle_x"]
        self.last_x = self.ball_x
        self.last_y = self.ball_y
        self.brick_map = [[1 <= y <= 3 for x in range(10)] for y in range(10)]
        self.strike = False
        self.terminal = False

    def observation(self):
        obs = [0.0] * 400
        obs[(9 * 10 + self.paddle_x) * 4 + 0] = 1.0
        obs[(self.ball_y * 10 + self.ball_x) * 4 + 1] = 1.0
        obs[(self.last_y * 10 + self.last_x) * 4 + 2] = 1.0
        for y in range(10):
            for x in range(10):
                if self.brick_map[y][x]:
                    obs[(y * 10 + x) * 4 + 3] = 1.0
        return obs

    def step(self, action):
        if self.terminal:
            return 0.0, True
        reward = 0.0
        if action == 1:
            self.paddle_x = max(self.paddle_x - 1, 0)
        elif action == 2:
            self.paddle_x = min(self.paddle_x + 1, 9)
        self.last_x = self.ball_x
        self.last_y = self.ball_y
        dx, dy = [(-1, -1), (1, -1), (-1, 1), (1, 1)][self.ball_dir]
        new_x = self.ball_x + dx
        new_y = self.ball_y + dy
        strike_toggle = False
        if new_x < 0 or new_x > 9:
            new_x = min(max(new_x, 0), 9)
            self.ball_dir = [1, 0, 3, 2][self.ball_dir]
        if new_y < 0:
            new_y = 0
            self.ball_dir = [2, 3, 0, 1][self.ball_dir]
        elif self.brick_map[new_y][new_x]:
            strike_toggle = True
            if not self.strike:
                reward += 1.0
                self.strike = True
                self.brick_map[new_y][new_x] = False
                new_y = self.last_y
                self.ball_dir = [3, 2, 1, 0][self.ball_dir]
        elif new_y == 9:
            if not any(any(row) for row in self.brick_map):
                self.brick_map = [[1 <= y <= 3 for x in range(10)] for y in range(10)]
            if self.ball_x == self.paddle_x:
                self.ball_dir = [3, 2, 1, 0][self.ball_dir]
                new_y = self.last_y
            elif new_x == self.paddle_x:
                self.ball_dir = [2, 3, 0, 1][self.ball_dir]
                new_y = self.last_y
            else:
                self.terminal = True
        if not strike_toggle:
            self.strike = False
        self.ball_x = new_x
        self.ball_y = new_y
        return reward, self.terminal


MAX_TRACE_STEPS = {
    "cartpole": 500,
    "acrobot": 500,
    "mountaincar": 200,
    "breakout": 400,
}


def make_env(entry):
    env = entry["env"]
    if env == "cartpole":
        return CartPole(entry["state"])
    if env == "acrobot":
        return Acrobot(entry["state"])
    if env == "mountaincar":
        return MountainCar(entry["state"])
    if env == "breakout":
        return Breakout(entry)
    raise ValueError(f"unknown env {env}")


def main():
    if len(sys.argv) != 3:
        sys.exit(f"usage: {sys.argv[0]} init_states.json out.csv")
    with open(sys.argv[1]) as f:
        entries = json.load(f)["entries"]
    rows = []
    for entry in entries:
        env = make_env(entry)
        name, seed = entry["env"], entry["seed"]
        rng = random.Random(f"{name}-{seed}")
        steps = 0
        for t in range(1, MAX_TRACE_STEPS[name] + 1):
            action = rng.randrange(env.ACTIONS)
            reward, terminated = env.step(action)
            steps += 1
            done = terminated or (
                env.TIME_LIMIT is not None and steps >= env.TIME_LIMIT
            )
            rows.append(
                [
                    name,
                    seed,
                    t,
                    action,
                    repr(reward),
                    "true" if done else "false",
                    fnv1a_obs(env.observation()),
                ]
            )
            if done:
                break
    with open(sys.argv[2], "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["env", "seed", "t", "action", "reward", "done", "obs_hash"])
        w.writerows(rows)
    print(f"wrote {len(rows)} rows to {sys.argv[2]}")


if __name__ == "__main__":
    main()
