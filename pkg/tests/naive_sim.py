"""Hand-stepped reference simulator, deliberately independent of the packed
implementation: registers are lists of bits, the majority vote counts ones,
shifting is list surgery."""


class NaiveCipher:
    def __init__(self, lengths, taps, clock_taps):
        self.lengths = lengths
        self.taps = taps
        self.clock_taps = clock_taps
        # regs[k][i] is bit i of register k+1
        self.regs = [[0] * l for l in lengths]

    def load(self, values):
        for k, v in enumerate(values):
            for i in range(self.lengths[k]):
                self.regs[k][i] = (v >> i) & 1

    def dump(self):
        out = []
        for k in range(3):
            v = 0
            for i, b in enumerate(self.regs[k]):
                v |= b << i
            out.append(v)
        return tuple(out)

    def step(self):
        bits = [self.regs[k][self.clock_taps[k]] for k in range(3)]
        majority = 1 if sum(bits) >= 2 else 0
        for k in range(3):
            if bits[k] != majority:
                continue
            fb = 0
            for t in self.taps[k]:
                fb ^= self.regs[k][t]
            self.regs[k] = [fb] + self.regs[k][:-1]

    def run(self, values, steps):
        self.load(values)
        out = []
        for _ in range(steps):
            self.step()
            out.append(self.dump())
        return out
