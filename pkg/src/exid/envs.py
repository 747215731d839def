"""Native environment implementations with a uniform stepping interface.

All four environments are self-contained re-implementations of the standard
dynamics: two classic-control tasks and two 6x6/7x7 gridworlds with an
egocentric 7x7x2 view flattened to 98 values. Each instance owns its random
generator, seeded at reset, so (seed, action sequence) fully determines a
trajectory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MOUNTAINCAR = "mountaincar"
CARTPOLE = "cartpole"
MINIGRID_DYNOBS = "minigrid-dynobs-6x6"
MINIGRID_LAVAGAP = "minigrid-lavagap-7x7"

ENV_IDS = (MOUNTAINCAR, CARTPOLE, MINIGRID_DYNOBS, MINIGRID_LAVAGAP)


@dataclass
class EnvSpec:
    env_id: str
    obs_dim: int
    n_actions: int
    obs_bounds: np.ndarray        # shape (obs_dim, 2), [low, high] per dimension
    max_steps: int
    feature_names: dict           # predicate-DSL name -> observation index


class Env:
    """Base: subclasses implement _reset(rng) and _step(action)."""

    spec: EnvSpec

    def __init__(self):
        self._rng = np.random.default_rng()
        self._steps = 0
        self._done = True

    def reset(self, seed: int) -> np.ndarray:
        self._rng = np.random.default_rng(seed)
        self._steps = 0
        self._done = False
        return self._reset(self._rng)

    def step(self, action: int) -> tuple[np.ndarray, float, bool]:
        if self._done:
            raise RuntimeError("step() called on a finished episode; reset first")
        if not 0 <= int(action) < self.spec.n_actions:
            raise ValueError(f"action {action} outside [0, {self.spec.n_actions})")
        self._steps += 1
        obs, reward, done = self._step(int(action))
        if self._steps >= self.spec.max_steps:
            done = True
        self._done = done
        return obs, reward, done

    def obs_bounds(self) -> np.ndarray:
        return self.spec.obs_bounds.copy()

    def _reset(self, rng):
        raise NotImplementedError

    def _step(self, action):
        raise NotImplementedError


class MountainCar(Env):
    """Underpowered car in a valley; sparse goal at position 0.5, -1 per step.

    Actions: 0 push left, 1 no-op, 2 push right.
    """

    MIN_POS, MAX_POS = -1.2, 0.6
    MAX_SPEED = 0.07
    GOAL_POS = 0.5
    FORCE = 0.001
    GRAVITY = 0.0025

    def __init__(self):
        super().__init__()
        bounds = np.array([[self.MIN_POS, self.MAX_POS],
                           [-self.MAX_SPEED, self.MAX_SPEED]])
        self.spec = EnvSpec(MOUNTAINCAR, 2, 3, bounds, 200,
                            {"pos": 0, "position": 0, "vel": 1, "velocity": 1})

    def _reset(self, rng):
        self.pos = rng.uniform(-0.6, -0.4)
        self.vel = 0.0
        return self._obs()

    def set_state(self, obs) -> None:
        """Place the car directly (dynamics-replay helper)."""
        self.pos, self.vel = float(obs[0]), float(obs[1])
        self._done = False
        self._steps = 0

    def _obs(self):
        return np.array([self.pos, self.vel])

    def _step(self, action):
        self.vel += (action - 1) * self.FORCE + math.cos(3 * self.pos) * (-self.GRAVITY)
        self.vel = min(max(self.vel, -self.MAX_SPEED), self.MAX_SPEED)
        self.pos += self.vel
        self.pos = min(max(self.pos, self.MIN_POS), self.MAX_POS)
        if self.pos == self.MIN_POS and self.vel < 0:
            self.vel = 0.0
        done = self.pos >= self.GOAL_POS
        return self._obs(), -1.0, done


class CartPole(Env):
    """Pole balancing, 500-step limit, +1 per step, Euler integration.

    Actions: 0 push left, 1 push right. Native velocity bounds are infinite;
    the declared bounds clip them to the ranges seen in practice so synthetic
    state sampling stays meaningful.
    """

    GRAVITY = 9.8
    MASS_CART = 1.0
    MASS_POLE = 0.1
    TOTAL_MASS = MASS_CART + MASS_POLE
    LENGTH = 0.5                          # half pole length
    POLEMASS_LENGTH = MASS_POLE * LENGTH
    FORCE_MAG = 10.0
    TAU = 0.02
    THETA_LIMIT = 12 * math.pi / 180
    X_LIMIT = 2.4

    def __init__(self):
        super().__init__()
        bounds = np.array([[-4.8, 4.8],
                           [-3.0, 3.0],
                           [-2 * self.THETA_LIMIT, 2 * self.THETA_LIMIT],
                           [-3.5, 3.5]])
        names = {"x": 0, "cart_pos": 0, "x_dot": 1, "cart_vel": 1,
                 "theta": 2, "pole_angle": 2, "theta_dot": 3, "pole_vel": 3}
        self.spec = EnvSpec(CARTPOLE, 4, 2, bounds, 500, names)

    def _reset(self, rng):
        self.state = rng.uniform(-0.05, 0.05, size=4)
        return self.state.copy()

    def set_state(self, obs) -> None:
        self.state = np.asarray(obs, dtype=np.float64).copy()
        self._done = False
        self._steps = 0

    def _step(self, action):
        x, x_dot, theta, theta_dot = self.state
        force = self.FORCE_MAG if action == 1 else -self.FORCE_MAG
        cos_t, sin_t = math.cos(theta), math.sin(theta)
        temp = (force + self.POLEMASS_LENGTH * theta_dot ** 2 * sin_t) / self.TOTAL_MASS
        theta_acc = (self.GRAVITY * sin_t - cos_t * temp) / (
            self.LENGTH * (4.0 / 3.0 - self.MASS_POLE * cos_t ** 2 / self.TOTAL_MASS))
        x_acc = temp - self.POLEMASS_LENGTH * theta_acc * cos_t / self.TOTAL_MASS
        x += self.TAU * x_dot
        x_dot += self.TAU * x_acc
        theta += self.TAU * theta_dot
        theta_dot += self.TAU * theta_acc
        self.state = np.array([x, x_dot, theta, theta_dot])
        done = abs(x) > self.X_LIMIT or abs(theta) > self.THETA_LIMIT
        return self.state.copy(), 1.0, done


# Gridworld object codes, stored in the observation divided by 10.
OBJ_UNSEEN = 0
OBJ_EMPTY = 1
OBJ_WALL = 2
OBJ_BALL = 6
OBJ_GOAL = 8
OBJ_LAVA = 9

VIEW = 7
GRID_OBS_DIM = VIEW * VIEW * 2

# View layout: the agent sits at view cell (col 3, row 6) facing row 0, and
# the view is flattened as obs[2 * (col * 7 + row) + channel] with channel 0
# the object code and channel 1 the (always zero here) state channel. Columns
# grow towards the agent's LEFT, which pins the three adjacent cells to the
# flat indices used by the built-in rule trees:
IDX_FRONT = 52    # (col 3, row 5) * 2
IDX_RIGHT = 40    # (col 2, row 6) * 2
IDX_LEFT = 68     # (col 4, row 6) * 2

# Direction vectors (dx, dy), y grows downward: 0 east, 1 south, 2 west, 3 north.
DIR_VEC = ((1, 0), (0, 1), (-1, 0), (0, -1))


class MiniGridBase(Env):
    """Shared machinery: grid storage, egocentric view, turn/forward actions.

    Actions: 0 turn left, 1 turn right, 2 move forward. Walking into a wall
    is a no-op; walking into a ball or onto lava ends the episode with zero
    reward; reaching the goal pays 1 - 0.9 * steps/max_steps.
    """

    size: int

    def __init__(self, env_id: str, size: int):
        super().__init__()
        self.size = size
        bounds = np.tile([0.0, 1.0], (GRID_OBS_DIM, 1))
        names = {"front": IDX_FRONT, "right": IDX_RIGHT, "left": IDX_LEFT}
        self.spec = EnvSpec(env_id, GRID_OBS_DIM, 3, bounds, 4 * size * size, names)
        self.grid = np.zeros((size, size), dtype=np.int64)

    def _blank_grid(self):
        g = np.full((self.size, self.size), OBJ_EMPTY, dtype=np.int64)
        g[0, :] = g[-1, :] = OBJ_WALL
        g[:, 0] = g[:, -1] = OBJ_WALL
        return g

    def _free_cells(self, exclude=()):
        cells = []
        for x in range(1, self.size - 1):
            for y in range(1, self.size - 1):
                if self.grid[x, y] == OBJ_EMPTY and (x, y) not in exclude:
                    cells.append((x, y))
        return cells

    def _obs(self):
        view = np.zeros((VIEW, VIEW, 2))
        fx, fy = DIR_VEC[self.agent_dir]
        lx, ly = fy, -fx                     # agent's left-hand direction
        ax, ay = self.agent_pos
        for col in range(VIEW):
            for row in range(VIEW):
                wx = ax + fx * (6 - row) + lx * (col - 3)
                wy = ay + fy * (6 - row) + ly * (col - 3)
                if 0 <= wx < self.size and 0 <= wy < self.size:
                    view[col, row, 0] = self.grid[wx, wy] / 10.0
        return view.reshape(-1)

    def _front_pos(self):
        dx, dy = DIR_VEC[self.agent_dir]
        return self.agent_pos[0] + dx, self.agent_pos[1] + dy

    def _success_reward(self):
        return 1.0 - 0.9 * (self._steps / self.spec.max_steps)

    def _move_forward(self):
        """Returns (reward, done) for a forward attempt on the current grid."""
        tx, ty = self._front_pos()
        cell = self.grid[tx, ty]
        if cell == OBJ_WALL:
            return 0.0, False
        if cell == OBJ_LAVA:
            self.agent_pos = (tx, ty)
            return 0.0, True
        if cell == OBJ_BALL:
            return 0.0, True
        self.agent_pos = (tx, ty)
        if cell == OBJ_GOAL:
            return self._success_reward(), True
        return 0.0, False


class MiniGridDynObs(MiniGridBase):
    """6x6 room, random agent start, 3 balls jittering one cell per step."""

    N_BALLS = 3

    def __init__(self):
        super().__init__(MINIGRID_DYNOBS, 6)

    def _reset(self, rng):
        self.grid = self._blank_grid()
        goal = (self.size - 2, self.size - 2)
        self.grid[goal] = OBJ_GOAL
        cells = self._free_cells()
        picks = rng.choice(len(cells), size=self.N_BALLS + 1, replace=False)
        self.balls = [cells[i] for i in picks[:self.N_BALLS]]
        for b in self.balls:
            self.grid[b] = OBJ_BALL
        self.agent_pos = cells[picks[self.N_BALLS]]
        self.agent_dir = int(rng.integers(4))
        return self._obs()

    def _move_balls(self):
        for i, (bx, by) in enumerate(self.balls):
            options = []
            for nx in range(bx - 1, bx + 2):
                for ny in range(by - 1, by + 2):
                    if (nx, ny) != (bx, by) and self.grid[nx, ny] == OBJ_EMPTY \
                            and (nx, ny) != self.agent_pos:
                        options.append((nx, ny))
            if options:
                new = options[self._rng.integers(len(options))]
                self.grid[bx, by] = OBJ_EMPTY
                self.grid[new] = OBJ_BALL
                self.balls[i] = new

    def _step(self, action):
        # Collision is judged against the pre-move ball positions, matching
        # the usual dynamic-obstacles convention.
        crash = action == 2 and self.grid[self._front_pos()] == OBJ_BALL
        self._move_balls()
        if crash:
            return self._obs(), 0.0, True
        if action == 0:
            self.agent_dir = (self.agent_dir - 1) % 4
        elif action == 1:
            self.agent_dir = (self.agent_dir + 1) % 4
        else:
            reward, done = self._move_forward()
            return self._obs(), reward, done
        return self._obs(), 0.0, False


class MiniGridLavaGap(MiniGridBase):
    """7x7 room split by a lava column with a single gap at a random row."""

    def __init__(self):
        super().__init__(MINIGRID_LAVAGAP, 7)

    def _reset(self, rng):
        self.grid = self._blank_grid()
        gap_row = int(rng.integers(1, self.size - 1))
        wall_x = self.size // 2
        for y in range(1, self.size - 1):
            if y != gap_row:
                self.grid[wall_x, y] = OBJ_LAVA
        self.grid[self.size - 2, self.size - 2] = OBJ_GOAL
        self.agent_pos = (1, 1)
        self.agent_dir = 0
        return self._obs()

    def _step(self, action):
        if action == 0:
            self.agent_dir = (self.agent_dir - 1) % 4
        elif action == 1:
            self.agent_dir = (self.agent_dir + 1) % 4
        else:
            reward, done = self._move_forward()
            return self._obs(), reward, done
        return self._obs(), 0.0, False


_ENV_CLASSES = {
    MOUNTAINCAR: MountainCar,
    CARTPOLE: CartPole,
    MINIGRID_DYNOBS: MiniGridDynObs,
    MINIGRID_LAVAGAP: MiniGridLavaGap,
}


def make_env(env_id: str) -> Env:
    if env_id not in _ENV_CLASSES:
        raise ValueError(f"unknown env {env_id!r}; supported: {', '.join(ENV_IDS)}")
    return _ENV_CLASSES[env_id]()


def env_spec(env_id: str) -> EnvSpec:
    return make_env(env_id).spec


def is_minigrid(env_id: str) -> bool:
    return env_id in (MINIGRID_DYNOBS, MINIGRID_LAVAGAP)
