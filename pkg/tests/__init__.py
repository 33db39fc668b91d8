# Paquete de tests
