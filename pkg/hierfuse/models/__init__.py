# Paquete de entidades del dominio: tensores, capas, modelos y datos
