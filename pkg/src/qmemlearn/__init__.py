"""Dense-simulator tools for comparing quantum learning protocols with and without quantum memory.

Modules
-------
qcore        states, Pauli algebra, POVMs, channels, Bell-basis measurement
clifford     GF(2) symplectic Clifford sampling and stabilizer states
ensembles    Haar samplers for U(d), O(d), Sp(d/2) and seeded random streams
weingarten   exact Weingarten functions, Haar moments and bound checks
protocols    classical shadows, Bell sampling, collision testing, channel learners
tasks        distinguishing tasks, learners and the success-rate harness
identities   one-command suite of identity and inequality checks
calibration  recorded tester constants
cli          command-line front end
"""

__version__ = "0.1.0"
