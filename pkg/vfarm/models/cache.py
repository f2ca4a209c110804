"""
Tables d'efficacité optique persistées, indexées par empreinte de géométrie
"""

from datetime import datetime

from sqlalchemy import Column, DateTime, Integer, String, Text

from vfarm.database import Base


class OpticsTableModel(Base):
    __tablename__ = 'optics_tables'

    geometry_hash = Column(String(64), primary_key=True, index=True)
    ray_count = Column(Integer, nullable=False)
    seed = Column(Integer, nullable=False)
    version = Column(String(32), nullable=False)
    payload = Column(Text, nullable=False)
    created_at = Column(DateTime, default=datetime.utcnow)
