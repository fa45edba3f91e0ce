# Módulo utils do DAE-EDA Bench
