# Módulo de problemas de benchmark
