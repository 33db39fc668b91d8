# Paquete principal de hierfuse
