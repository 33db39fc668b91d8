# Paquete de schemas Pydantic
