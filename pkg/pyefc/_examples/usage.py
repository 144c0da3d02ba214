from fractions import Fraction

import pyefc.schema.define as define
from pyefc.process.equilibrium import projection, stationary_distribution, theorem_diagnostics
from pyefc.process.functionals import comes_down_diagnostic, validate_characteristics
from pyefc.process.rates import build_generator, compatibility_defect
from pyefc.process.simulator import observables, simulate_path
from pyefc.schema.partition import Partition


def exact_two_state():
    half = Fraction(1, 2)
    chars = define.characteristics(c_k=1, nu_disl=[(1, (half, half))])
    print(validate_characteristics(chars).plain_str())
    rho = stationary_distribution(build_generator(chars, 2))
    print(rho.plain_str())


def equilibrium_report():
    chars = define.characteristics(c_e=1, c_k=1)
    report = theorem_diagnostics(chars, 4, k_max=3, b=2)
    print(report.plain_str())
    print(projection(report.rho, 3).block_count_marginal())
    print(compatibility_defect(chars, 4, 3).plain_str())


def kingman_comes_down():
    print(comes_down_diagnostic(define.characteristics(c_k=1), 100).plain_str())


def one_path():
    chars = define.characteristics(c_e=0.5, c_k=1, nu_disl=[(1, (0.5, 0.5))], nu_coag=[(2, (0.3,))])
    trajectory = simulate_path(chars, 6, Partition.zero(6), 5.0, seed=1, mode='ppp')
    print(trajectory)
    print(observables(trajectory).head())


if __name__ == '__main__':
    exact_two_state()
    equilibrium_report()
    kingman_comes_down()
    one_path()
