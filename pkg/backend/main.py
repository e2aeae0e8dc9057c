# Entrypoint for FastAPI app
import logging

from config import settings
from routes.api import app

logging.basicConfig(level=settings.log_level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")

# The app is already defined in routes.api, so we just import it
# This allows running with: uvicorn main:app --reload
