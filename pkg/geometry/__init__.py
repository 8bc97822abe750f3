"""H-representation polytope algebra"""
