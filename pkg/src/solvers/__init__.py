"""Forward modal solvers and reference finite-difference oracle"""
