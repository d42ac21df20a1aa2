"""Scratch validation: second-quantization oracle for H_k and block-vs-ED observables."""
import numpy as np
import math
from staggered_ising import (
    ChainSpec, AnnealSchedule, build_block6, build_block8, quadruplet_momenta,
    solve_chain, kink_density, staggered_kink_diff,
    DenseQuenchProblem, ed_evolve, ed_observables,
)

# ---- second-quantization oracle on the 4-mode Fock space ----
def fock_ops(n_modes=4):
    dim = 1 << n_modes
    cs = []
    for m in range(n_modes):
        c = np.zeros((dim, dim), dtype=complex)
        for idx in range(dim):
            if (idx >> m) & 1:
                sign = (-1) ** bin(idx & ((1 << m) - 1)).count("1")
                c[idx ^ (1 << m), idx] = sign
        cs.append(c)
    return cs

def quad_hamiltonian(k, J, D, h, backscatter=0.0):
    # modes 0..3 = k, -k, pi-k, pi+k
    mom = [k, -k, math.pi - k, math.pi + k]
    def mode_index(q):
        for i, m in enumerate(mom):
            if abs(((q - m + math.pi) % (2*math.pi)) - math.pi) < 1e-12:
                return i
        raise KeyError(q)
    cs = fock_ops()
    dim = cs[0].shape[0]
    H = np.zeros((dim, dim), dtype=complex)
    for q in mom:
        a = mode_index(q)
        H += J * (np.exp(-1j*q) * cs[a] @ cs[mode_index(-q)]
                  + np.exp(-1j*q) * cs[a].conj().T @ cs[mode_index(-q)].conj().T
                  - (np.exp(1j*q) + np.exp(-1j*q)) * cs[a].conj().T @ cs[a])
        H += D * (-np.exp(-1j*q) * cs[a] @ cs[mode_index(math.pi - q)]
                  + np.exp(-1j*q) * cs[a].conj().T @ cs[mode_index(math.pi - q)].conj().T
                  + np.exp(1j*q) * cs[a].conj().T @ cs[mode_index(math.pi + q)]
                  - np.exp(-1j*q) * cs[a].conj().T @ cs[mode_index(math.pi + q)])
        H += h * (2.0 * cs[a].conj().T @ cs[a] - np.eye(dim))
    if backscatter != 0.0:
        b = complex(backscatter)
        i_k, i_mk, i_pmk, i_ppk = 0, 1, 2, 3
        H += b * (cs[i_k].conj().T @ cs[i_mk] + cs[i_ppk].conj().T @ cs[i_pmk])
        H += np.conj(b) * (cs[i_mk].conj().T @ cs[i_k] + cs[i_pmk].conj().T @ cs[i_ppk])
    return H

def restrict(H, basis):
    # basis: occupation tuples (n_k, n_-k, n_pi-k, n_pi+k); Fock index packs mode m at bit m
    idxs = [sum(b << m for m, b in enumerate(occ)) for occ in basis]
    return H[np.ix_(idxs, idxs)]

from staggered_ising.blocks import BASIS6, BASIS8

rng = np.random.default_rng(7)
max6 = 0.0
max8 = 0.0
for _ in range(10):
    k = rng.uniform(0.05, math.pi/2 - 0.05)
    J, D, h = rng.uniform(0.1, 3.0, size=3)
    Hq = quad_hamiltonian(k, J, D, h)
    got = build_block6(k, J, D, h)
    max6 = max(max6, np.max(np.abs(restrict(Hq, BASIS6) - got)))
    b = complex(rng.normal(), rng.normal())
    Hq8 = quad_hamiltonian(k, J, D, h, backscatter=b)
    got8 = build_block8(k, J, D, h, b)
    max8 = max(max8, np.max(np.abs(restrict(Hq8, BASIS8) - got8)))
print("block6 vs oracle:", max6)
print("block8 vs oracle:", max8)

# leakage: does the quadruplet Hamiltonian leak out of the 6/8-state subspaces?
Hq = quad_hamiltonian(0.7, 1.0, 0.4, 2.0)
idx6 = [sum(b << m for m, b in enumerate(occ)) for occ in BASIS6]
others = [i for i in range(16) if i not in idx6]
print("leak 6->rest:", np.max(np.abs(Hq[np.ix_(others, idx6)])))

# ---- block vs ED ----
for N in (4, 8):
    for trial in range(3):
        J = rng.uniform(0.5, 1.5)
        D = rng.uniform(0.0, 0.5 * J)
        tau = rng.uniform(0.5, 8.0)
        chain = ChainSpec(N=N, J=J, delta=D)
        sched = AnnealSchedule.linear(gamma0=11.0, j1=15.0)
        states = solve_chain(chain, sched, tau, tol=1e-9)
        Kb = kink_density(states, chain)
        Pb = staggered_kink_diff(states, chain)
        prob = DenseQuenchProblem(N=N, J=J, delta=D, schedule=sched, tau=tau)
        psi = ed_evolve(prob, tol=1e-10)
        obs = ed_observables(psi, chain)
        print(f"N={N} J={J:.3f} d={D:.3f} tau={tau:6.3f}  K: {Kb:.9f} vs {obs.K:.9f}  "
              f"dK={abs(Kb-obs.K):.2e}  P: {Pb:.9f} vs {obs.P:.9f} dP={abs(Pb-obs.P):.2e}")
