# coding: utf-8

# # Class numbers three ways
#
# Count reduced forms, evaluate the analytic formula through L(1, chi), and
# look at where the principal CM point sits.

# In[1]:

import numpy as np

from effao.quad import (
    class_number,
    class_number_from_L,
    fundamental_discriminants,
    lambda_points,
    tau_principal,
)

ds = fundamental_discriminants(3, 2000)
h = np.array([class_number(d) for d in ds])
print(len(ds), "fundamental discriminants, mean h =", h.mean().round(2))
print("class number one:", [d for d, k in zip(ds, h) if k == 1])


# In[2]:

for d in (-23, -47, -71, -199):
    print(d, class_number(d), class_number_from_L(d))


# The principal form gives the CM point highest in the strip; every other one
# sits at most half as high.

# In[3]:

d = -1411
top = tau_principal(d)
ratios = sorted(float(P.imag_sq / top.imag_sq) for P in lambda_points(d) if P.index != top.index)
print(f"h({d}) = {class_number(d)}, largest other Im^2 ratio = {ratios[-1]:.4f}")
