"""Physical constants in the package's unit system (eV, nm, ns, K, T)."""

HBAR_EV_NS = 0.658212e-6
HBAR_EV_FS = 0.658212
# hbar*gamma_e / 2 k_B, in K/T
POLARIZATION_K_PER_T = 0.672
# gamma_e / 2 pi, in GHz/T
ESR_GHZ_PER_T = 28.0
