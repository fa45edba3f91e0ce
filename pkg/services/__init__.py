# Módulo de serviços: DAE, PBIL, laço do EDA e varreduras
