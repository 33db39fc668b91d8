# Paquete de subcomandos de la CLI
