# coding: utf-8
#
# Counter-based random streams for particle ensembles.
#
# Particles are grouped in fixed blocks of BLOCK_PARTICLES and time in fixed
# chunks of CHUNK_STEPS. Each (block, chunk) pair owns a Philox counter range
# keyed by the run seed, so particle i always sees the same numbers no matter
# how many particles are simulated, how the blocks are spread over workers, or
# at which step a simulation is resumed.

import numpy as np

BLOCK_PARTICLES = 1024
CHUNK_STEPS = 64

_MASK64 = (1 << 64) - 1


class ParticleStreams(object):
    def __init__(self, seed: int, n_particles: int, antithetic: bool = False,
                 block_size: int = BLOCK_PARTICLES, chunk_steps: int = CHUNK_STEPS):
        if n_particles < 1:
            raise ValueError("n_particles must be >= 1", n_particles)
        if antithetic and block_size % 2:
            raise ValueError("antithetic pairing needs an even block size")
        self.seed = int(seed) & _MASK64
        self.n_particles = int(n_particles)
        self.antithetic = bool(antithetic)
        self.block_size = block_size
        self.chunk_steps = chunk_steps

    def __repr__(self):
        return "<ParticleStreams seed=%d n=%d antithetic=%s>" % (
            self.seed, self.n_particles, self.antithetic)

    @property
    def n_blocks(self) -> int:
        return -(-self.n_particles // self.block_size)

    def block_range(self, block: int):
        start = block * self.block_size
        return start, min(start + self.block_size, self.n_particles)

    def _generator(self, block: int, tag: int) -> np.random.Generator:
        counter = np.array([0, tag, block, 0], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=self.seed, counter=counter))

    def _rows(self) -> int:
        return self.block_size // 2 if self.antithetic else self.block_size

    def _pair(self, a, negate=False):
        if not self.antithetic:
            return a
        return np.concatenate([a, -a if negate else a])

    def initial_uniforms(self, block: int):
        """ (u, v) for the particles of the block """
        gen = self._generator(block, 0)
        rows = self._rows()
        u = self._pair(gen.random(rows))
        v = self._pair(gen.random(rows))
        start, stop = self.block_range(block)
        return u[:stop - start], v[:stop - start]

    def _chunk(self, block: int, chunk: int):
        gen = self._generator(block, chunk + 1)
        shape = (self._rows(), self.chunk_steps)
        z = gen.standard_normal(shape)
        w = 1.0 - gen.random(shape)  # (0, 1]
        return self._pair(z, negate=True), self._pair(w)

    def normals(self, block: int, k0: int, k1: int):
        """
        Standard normals and bridge uniforms for steps k0..k1-1.

        Returns:
            (z, w) of shape (particles in block, k1 - k0)
        """
        start, stop = self.block_range(block)
        m = stop - start
        zs, ws = [], []
        c0, c1 = k0 // self.chunk_steps, (k1 - 1) // self.chunk_steps
        for c in range(c0, c1 + 1):
            z, w = self._chunk(block, c)
            lo = max(k0 - c * self.chunk_steps, 0)
            hi = min(k1 - c * self.chunk_steps, self.chunk_steps)
            zs.append(z[:m, lo:hi])
            ws.append(w[:m, lo:hi])
        if not zs:
            return np.empty((m, 0)), np.empty((m, 0))
        return np.concatenate(zs, axis=1), np.concatenate(ws, axis=1)
