# coding: utf-8

# # Special points on curves in the plane
#
# Search all pairs of CM points up to a discriminant bound, then certify that
# a line carries none for a fixed imaginary quadratic field.

# In[1]:

from effao import is_dnd, is_hdnd, parse_poly
from effao.oort import dominance_search, linear_special_on_hdnd, special_points_on

F = parse_poly("x1 + x2 - 1728")
res = special_points_on(F, 50)
print(res.examined, "tuples examined")
for P in res.points:
    print(P)


# In[2]:

G = parse_poly("x1 + x2 - 1")
print("dnd:", bool(is_dnd(G)), " hdnd:", bool(is_hdnd(G)))
for d in (-3, -4, -7):
    run = dominance_search(G, d)
    print(d, "f0 =", run.certificate.bound_f, " empty:", run.empty_certified)
    for line in run.certificate.transcript[:3]:
        print("   ", line)


# The diagonal is a special curve. It comes back as a descriptor, not as a
# list of points.

# In[3]:

rep = linear_special_on_hdnd(parse_poly("x1 - x2"), B=20)
for v in rep.varieties:
    print(v)
