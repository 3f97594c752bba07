# Independent dense/tridiagonal oracle (scipy) for the fiber fixtures.
# Regenerate with: python3 dense_oracle.py
import numpy as np
from scipy.linalg import eigh_tridiagonal, solve_banded
L, n = 20.0, 4001
tau = np.linspace(-L, L, n); dt = tau[1]-tau[0]
ti = tau[1:-1]
def op(a, xi):
    b = np.where(ti >= 0, 1.0, a)
    d = 2/dt**2 + (xi + b*ti)**2
    e = -np.ones(len(ti)-1)/dt**2
    return d, e
def mu(a, xi):
    d, e = op(a, xi)
    return eigh_tridiagonal(d, e, select='i', select_range=(0,0), eigvals_only=True)[0]
a = -0.5
print("mu(-0.5,-0.8) =", repr(mu(a, -0.8)))
print("FD mu' at -0.8 =", repr((mu(a,-0.8+1e-4)-mu(a,-0.8-1e-4))/2e-4))
xs = np.arange(-2.0, 0.0+1e-12, 1e-3)
ms = np.array([mu(a, x) for x in xs])
k = np.argmin(ms)
# local parabolic refinement by repeated three-point fits on shrinking steps
x0, h = xs[k], 1e-3
for _ in range(6):
    f = [mu(a, x0-h), mu(a, x0), mu(a, x0+h)]
    x0 = x0 - h*(f[2]-f[0])/(2*(f[2]-2*f[1]+f[0]))
    h /= 10
print("zeta =", repr(x0), "beta =", repr(mu(a, x0)))
# I2 via dense bordered solve
d, e = op(a, x0)
w, v = eigh_tridiagonal(d, e, select='i', select_range=(0,1))
beta, phi = w[0], v[:,0]
b = np.where(ti >= 0, 1.0, a)
W = x0 + b*ti
u = W*phi
u = u - phi*(phi@u)
N = len(ti)
A = np.diag(d-beta) + np.diag(e,1) + np.diag(e,-1)
M = np.zeros((N+1,N+1)); M[:N,:N]=A; M[:N,N]=phi; M[N,:N]=phi
rhs = np.zeros(N+1); rhs[:N]=u
sol = np.linalg.solve(M, rhs)[:N]
print("I2 =", repr(float(u@sol)))   # Euclidean-normalized phi: L2 <Wphi, R Wphi> equals Euclidean value
print("lambda2(zeta) =", repr(w[1]))
