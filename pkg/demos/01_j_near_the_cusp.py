# coding: utf-8

# # j near the cusp
#
# j is computed from Eisenstein series with rigorous tail bounds, so every
# value below is a ball. Start with the critical values.

# In[1]:

from flint import acb, arb

from effao import cusp_gap, j, j_jet, reduce_to_F

print(j(acb(0, 1)))                   # 1728
print(j(acb(-0.5, arb(3).sqrt() / 2)))   # a ball around 0
print(j(acb(-0.5, 3 ** 0.5 / 2)))        # the float is off by 1e-17 and the zero is triple


# In[2]:

# Heegner number 163: j is within 1e-12 of -640320^3.
tau = acb(-0.5, 163 ** 0.5 / 2)
print(j(tau, prec=256) + 640320 ** 3)


# Far up the strip j looks like 1/q + 744, so | |j| - e^(2 pi y) | settles at
# 744 cos(2 pi x). It stays below 2079 on the closed fundamental domain.

# In[3]:

for y in (0.96, 1.0, 2.0, 5.0, 20.0):
    print(f"Im tau = {y:5.2f}   gap <= {cusp_gap(acb(0.3, y)):9.3f}")


# Reduction first, then evaluation. The jet (j, j', j'') comes along for free.

# In[4]:

z, g = reduce_to_F(acb(0.123, 0.004))
print("reduced:", z, "via", g)
jet = j_jet(z)
print(jet.y, jet.y_dot, jet.y_ddot, sep="\n")
