r"""
Eigenvalue counts in small windows
----------------------------------
For a continuum Anderson model discretized on a box of ``L`` cells, the
expected number of eigenvalues in ``[E0 - eps, E0 + eps]`` should grow linearly
in the volume. In ``eps`` it grows like the concentration modulus of the
coupling distribution. A uniform density gives ``eps``, a Cantor measure gives
``eps ** (log 2 / log 3)``, and atoms give a plateau.
"""
from wegnerlab.experiments import ExperimentConfig, run_wegner

base = {"kind": "wegner", "model": {"dimension": 1, "points_per_cell": 1},
        "measure": {"kind": "uniform", "lo": 0.0, "hi": 2.0},
        "energy_E0": 3.0, "master_seed": 7}


def estimate(table, name):
    return next(r for r in table.summary if r["name"] == name)


#%%
# Volume scaling at fixed eps.
t = run_wegner(ExperimentConfig.from_dict(dict(base, L_values=[32, 64, 128], epsilons=[0.05],
                                               n_realizations=100)))
rec = estimate(t, "volume_exponent")
print(f"volume exponent {rec['estimate']:.3f} +- {rec['stderr']:.3f}")

#%%
# Window scaling, uniform against Cantor couplings.
t = run_wegner(ExperimentConfig.from_dict(dict(base, L_values=[64],
                                               epsilons=[0.0125, 0.025, 0.05, 0.1, 0.2],
                                               n_realizations=100)))
print(f"uniform eps exponent {estimate(t, 'epsilon_exponent')['estimate']:.3f}")

t = run_wegner(ExperimentConfig.from_dict(dict(
    base, L_values=[256], energy_E0=2.0, epsilons=[3.0 ** -k for k in range(4)],
    measure={"kind": "cantor", "depth": 30, "offset": 0.0, "width": 3.0 ** 9},
    n_realizations=2000)))
print(f"Cantor eps exponent {estimate(t, 'epsilon_exponent')['estimate']:.3f}  (log2/log3 = 0.631)")

#%%
# Two far-apart atoms. Below the spacing of the atomic spectrum the count
# stops shrinking with eps.
t = run_wegner(ExperimentConfig.from_dict(dict(
    base, L_values=[64], energy_E0=1.9998, epsilons=[1e-2, 1e-3, 1e-4, 1e-5, 1e-6],
    measure={"kind": "atomic", "atoms": [[0.0, 0.5], [10000.0, 0.5]]}, n_realizations=40)))
print(f"atomic plateau detected: {estimate(t, 'epsilon_exponent')['plateau']}")
