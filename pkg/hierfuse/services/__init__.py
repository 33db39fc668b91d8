# Paquete de servicios: datos, entrenamiento y persistencia
