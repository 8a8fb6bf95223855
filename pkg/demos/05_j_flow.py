# coding: utf-8

# # Flowing along the j-field
#
# The jet (tau, j, j', j'') solves a polynomial vector field. Integrate it in
# ball arithmetic and compare with direct evaluation.

# In[1]:

import numpy as np
from flint import acb

from effao.dynamics import integrate, j_field, jet_point
from effao.jfun import j_jet

xi = j_field(1, {1})
print(xi.names)
tr = integrate(xi, jet_point(acb(0, 2), 1, {1}), 0.3j, step=0.01)


# In[2]:

ts = np.linspace(0, len(tr.times) - 1, 6).astype(int)
for k in ts:
    t = complex(tr.complex_time(k))
    exact = j_jet(acb(0, 2) + acb(t.real, t.imag)).y
    got = tr.points[k][1]
    print(f"t = {t.imag:.3f}i   rel err = {float(abs(got - exact) / abs(exact)):.2e}")
