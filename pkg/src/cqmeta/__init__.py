"""Finite-blocklength quantum hypothesis testing and quasi-perfect cq codes."""
