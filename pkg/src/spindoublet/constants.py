"""Physical constants, expressed in the package's working units.

Every frequency in this package is a linear frequency. Energies are stored
as E/h in GHz, magnetic fields in mT, temperatures in K, couplings and
linewidths in MHz. The two constants below carry the unit conversions and
are quoted to eight significant figures (CODATA).
"""

# Bohr magneton over Planck constant, GHz per tesla.
BOHR_MAGNETON_GHZ_PER_T = 13.996245

# Boltzmann constant over Planck constant, GHz per kelvin.
BOLTZMANN_GHZ_PER_K = 20.836619
