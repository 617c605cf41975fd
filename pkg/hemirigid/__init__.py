'''
Numerical checks of hemisphere rigidity: curvature of graphs,
mean curvature operators, maximum principle barriers, sliding spheres and a
Dirichlet solver for the prescribed mean curvature equation.
'''
