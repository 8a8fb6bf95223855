# coding: utf-8

# # Modular polynomials and isogenies

# In[1]:

from effao import is_isogenous, phi, phi_eval
from effao.oort import hilbert_class_poly, rational_singular_moduli

P2 = phi(2)
for (a, b), c in sorted(P2.coeffs.items(), reverse=True):
    print(f"{c:>20d}  x^{a} y^{b}")


# j(i) = 1728 and j(2i) = 287496 are 2-isogenous.

# In[2]:

from effao import QuadForm

print(phi_eval(2, 1728, 287496))
print(is_isogenous(QuadForm(1, 0, 1), QuadForm(1, 0, 4), 2))   # exact witness
print(is_isogenous(QuadForm(1, 0, 1), QuadForm(1, 1, 6), 2))   # ball excludes 0


# The thirteen rational singular moduli are the roots of the linear class
# polynomials.

# In[3]:

for d, v in sorted(rational_singular_moduli().items(), reverse=True):
    print(f"{d:5d}  {v}")

print(hilbert_class_poly(-23))
