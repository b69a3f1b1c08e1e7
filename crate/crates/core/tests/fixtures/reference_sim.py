#!/usr/bin/env python3
"""Reference simulators for the two grid games, used to produce the golden
trajectory fixtures. Written from the rule descriptions, independently of the
Rust implementation. Run from this directory to regenerate the fixtures."""

import copy

N = 10


def bits(planes):
    return "".join("1" if planes[ch][r][c] else "0"
                   for ch in range(len(planes)) for r in range(N) for c in range(N))


def empty(channels):
    return [[[False] * N for _ in range(N)] for _ in range(channels)]


class Breakout:
    # channels: paddle, ball, trail, brick; actions: noop, left, right
    def __init__(self, spawn_col):
        self.paddle = 4
        self.bricks = [[1 <= r <= 3 for _ in range(N)] for r in range(N)]
        self.ball = (4, spawn_col)
        self.dir = (1, 1 if spawn_col < 5 else -1)
        self.trail = None
        self.done = False

    def obs(self):
        p = empty(4)
        p[0][9][self.paddle] = True
        p[1][self.ball[0]][self.ball[1]] = True
        if self.trail is not None:
            p[2][self.trail[0]][self.trail[1]] = True
        for r in range(N):
            for c in range(N):
                p[3][r][c] = self.bricks[r][c]
        return bits(p)

    def step(self, a):
        assert not self.done
        if a == 1:
            self.paddle = max(0, self.paddle - 1)
        elif a == 2:
            self.paddle = min(N - 1, self.paddle + 1)
        r, c = self.ball
        dr, dc = self.dir
        if not 0 <= c + dc < N:
            dc = -dc
        if r + dr < 0:
            dr = -dr
        tr, tc = r + dr, c + dc
        self.trail = (r, c)
        reward = 0
        if self.bricks[tr][tc]:
            self.bricks[tr][tc] = False
            reward = 1
            dr = -dr
            assert any(any(row) for row in self.bricks), "wall clearance needs the seeded stream"
        elif tr == 9:
            if tc == self.paddle:
                dr = -dr
            else:
                self.ball = (tr, tc)
                self.done = True
        else:
            self.ball = (tr, tc)
        self.dir = (dr, dc)
        return reward

    def landing_column(self):
        sim = copy.deepcopy(self)
        sim.paddle = -100  # never bounce during lookahead
        for _ in range(40):
            if sim.dir[0] > 0 and sim.ball[0] == 8:
                c, dc = sim.ball[1], sim.dir[1]
                return c + dc if 0 <= c + dc < N else c - dc
            sim.step(0)
            if sim.done:
                return sim.ball[1]
        return sim.ball[1]


def breakout_policy(env, t):
    target = env.landing_column()
    if t % 7 == 3:
        return 0
    if env.paddle < target:
        return 2
    if env.paddle > target:
        return 1
    return 0


class SpaceInvaders:
    # channels: cannon, alien, friendly, enemy, alien-left, alien-right
    # actions: noop, left, right, fire
    def __init__(self):
        self.cannon = 5
        self.wave = 0
        self.friendly = None
        self.enemy = []
        self.cooldown = 0
        self.shot_timer = 10
        self.shot_col = 0
        self.done = False
        self.new_wave()

    def new_wave(self):
        self.aliens = [[r < 4 and 2 <= c < 8 for c in range(N)] for r in range(N)]
        self.going = -1
        self.move_timer = self.speed()

    def count(self):
        return sum(sum(row) for row in self.aliens)

    def speed(self):
        left = self.count()
        s = 4 - min(self.wave, 4) - (left <= 12) - (left <= 4)
        return max(s, 1)

    def obs(self):
        p = empty(6)
        p[0][9][self.cannon] = True
        for r in range(N):
            for c in range(N):
                if self.aliens[r][c]:
                    p[1][r][c] = True
                    p[4 if self.going < 0 else 5][r][c] = True
        if self.friendly is not None:
            p[2][self.friendly[0]][self.friendly[1]] = True
        for (r, c) in self.enemy:
            p[3][r][c] = True
        return bits(p)

    def hit(self):
        if self.friendly is not None:
            r, c = self.friendly
            if self.aliens[r][c]:
                self.aliens[r][c] = False
                self.friendly = None
                return 1
        return 0

    def step(self, a):
        assert not self.done
        reward = 0
        if a == 1:
            self.cannon = max(0, self.cannon - 1)
        elif a == 2:
            self.cannon = min(N - 1, self.cannon + 1)
        elif a == 3 and self.friendly is None and self.cooldown == 0:
            self.friendly = (9, self.cannon)
            self.cooldown = 5
        if self.friendly is not None:
            r, c = self.friendly
            self.friendly = (r - 1, c) if r > 0 else None
        reward += self.hit()
        self.enemy = [(r + 1, c) for (r, c) in self.enemy if r + 1 < N]
        if (9, self.cannon) in self.enemy:
            self.done = True
        self.move_timer -= 1
        if self.move_timer == 0:
            cols = [c for r in range(N) for c in range(N) if self.aliens[r][c]]
            if min(cols) + self.going < 0 or max(cols) + self.going >= N:
                moved = [[False] * N for _ in range(N)]
                for r in range(N - 1):
                    moved[r + 1] = list(self.aliens[r])
                self.aliens = moved
                self.going = -self.going
            else:
                self.aliens = [[0 <= c - self.going < N and row[c - self.going] for c in range(N)]
                               for row in self.aliens]
            reward += self.hit()
            if any(self.aliens[9]):
                self.done = True
            self.move_timer = self.speed()
        self.shot_timer -= 1
        if self.shot_timer == 0:
            for k in range(N):
                col = (self.shot_col + k) % N
                rows = [r for r in range(N) if self.aliens[r][col]]
                if rows:
                    if rows[-1] + 1 < N:
                        self.enemy.append((rows[-1] + 1, col))
                    self.shot_col = (col + 1) % N
                    break
            self.shot_timer = 10
            if (9, self.cannon) in self.enemy:
                self.done = True
        self.cooldown = max(0, self.cooldown - 1)
        if not self.done and self.count() == 0:
            self.wave += 1
            self.new_wave()
        return reward


def invaders_policy(env, t):
    script = [3, 1, 1, 0, 3, 2, 2, 2, 3, 0, 1, 3, 2, 0, 0, 3, 1, 1, 1, 3]
    return script[t % len(script)]


SURVIVOR = [1, 3, 3, 1, 2, 3, 3, 3, 0, 3, 0, 3, 2, 3, 1, 1, 3, 3, 3, 3,
            3, 1, 1, 1, 3, 3, 0, 0, 1, 3, 0, 2, 0, 2, 3, 3, 3, 3, 3, 3]


def record(env, policy, steps):
    lines = [f"0\t-\t0\t0\t{env.obs()}"]
    for t in range(steps):
        a = policy(env, t)
        r = env.step(a)
        lines.append(f"{t + 1}\t{a}\t{r}\t{int(env.done)}\t{env.obs()}")
        if env.done:
            break
    return "\n".join(lines) + "\n"


if __name__ == "__main__":
    for col in range(N):
        with open(f"breakout_col{col}.tsv", "w") as f:
            f.write(record(Breakout(col), breakout_policy, 40))
    with open("space_invaders_hit.tsv", "w") as f:
        f.write(record(SpaceInvaders(), invaders_policy, 40))
    with open("space_invaders_survive.tsv", "w") as f:
        f.write(record(SpaceInvaders(), lambda env, t: SURVIVOR[t], 40))
