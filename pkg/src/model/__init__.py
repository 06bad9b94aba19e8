"""Problem definition: species, kernels, potentials, diffusion and validation"""
